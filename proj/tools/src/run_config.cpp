#include "swapnas/run_config.hpp"

#include <charconv>
#include <sstream>

#include "swapnas/bench_eval.hpp"
#include "swapnas/errors.hpp"
#include "swapnas/io.hpp"
#include "swapnas/text_format.hpp"

namespace swapnas {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(const std::string& text, const std::string& key, std::size_t line) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end || text.empty())
    throw ParseError("'" + key + "' expects an integer, got '" + text + "'", line);
  return v;
}

}  // namespace

RegularisationChoice parse_regularisation(const std::string& mu, const std::string& sigma) {
  RegularisationChoice c;
  if (mu == "none" || sigma == "none") {
    if (mu != sigma) throw ValidationError("mu and sigma must both be 'none'");
    c.mode = RegularisationChoice::Mode::None;
    return c;
  }
  if (mu == "auto" || sigma == "auto") {
    if (mu != sigma) throw ValidationError("mu and sigma must both be 'auto'");
    c.mode = RegularisationChoice::Mode::Auto;
    return c;
  }
  try {
    c.mu = parse_real(mu);
    c.sigma = parse_real(sigma);
  } catch (const ParseError&) {
    throw ValidationError("mu/sigma must be numbers, 'auto' or 'none'");
  }
  RegularisationParams check(c.mu, c.sigma);
  c.mode = RegularisationChoice::Mode::Fixed;
  return c;
}

std::optional<RegularisationParams> resolve_regularisation(const RegularisationChoice& choice, int nodes,
                                                           const AssemblyConfig& assembly, std::uint64_t seed) {
  switch (choice.mode) {
    case RegularisationChoice::Mode::None: return std::nullopt;
    case RegularisationChoice::Mode::Fixed: return RegularisationParams(choice.mu, choice.sigma);
    case RegularisationChoice::Mode::Auto: break;
  }
  const auto sizes = sample_sizes(nodes, assembly, kAutoSizeSamples, seed);
  return estimate_mu_sigma(sizes);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<int>(trim(item), "list", 0));
  return out;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ValidationError("expected a boolean, got '" + text + "'");
}

SearchRunConfig parse_search_config(const std::string& text) {
  SearchRunConfig rc;
  SearchConfig& s = rc.search;
  std::string mu = "auto", sigma = "auto";
  std::istringstream is(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + raw + "'", line);
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    try {
      if (key == "population") s.population = parse_integer<int>(value, key, line);
      else if (key == "cycles") s.cycles = parse_integer<int>(value, key, line);
      else if (key == "sample_size") s.sample_size = parse_integer<int>(value, key, line);
      else if (key == "mutation_times") s.mutation_times = parse_integer<int>(value, key, line);
      else if (key == "crossover_prob") s.crossover_prob = parse_real(value);
      else if (key == "nodes") s.nodes = parse_integer<int>(value, key, line);
      else if (key == "seed") s.seed = parse_integer<std::uint64_t>(value, key, line);
      else if (key == "batch") s.batch = BatchSpec::parse(value);
      else if (key == "depth") s.scoring.assembly.depth = parse_integer<int>(value, key, line);
      else if (key == "stem_channels") s.scoring.assembly.stem_channels = parse_integer<int>(value, key, line);
      else if (key == "reductions") s.scoring.assembly.reduction_points = parse_int_list(value);
      else if (key == "num_classes") s.scoring.assembly.num_classes = parse_integer<int>(value, key, line);
      else if (key == "mu") mu = value;
      else if (key == "sigma") sigma = value;
      else if (key == "standardise") s.scoring.capture.standardise = parse_bool(value);
      else throw ParseError("unknown key '" + key + "'", line);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(std::string(e.what()), line);
    } catch (const ValidationError& e) {
      throw ParseError(std::string(e.what()), line);
    }
  }
  s.scoring.assembly.input_channels = s.batch.channels;
  rc.regularisation = parse_regularisation(mu, sigma);
  return rc;
}

SearchRunConfig load_search_config(const std::filesystem::path& path) {
  return parse_search_config(read_text_file(path));
}

std::string format_search_result(const SearchResult& result, const SearchConfig& cfg) {
  std::ostringstream os;
  os << "config=" << cfg.fingerprint() << '\n';
  os << "best_cell=" << encode_cell_inline(result.best.cell) << '\n';
  os << "best_score=" << format_real(result.best.score) << '\n';
  os << "best_psi=" << result.best.psi << '\n';
  os << "best_theta_mb=" << format_real(result.best.theta_mb) << '\n';
  os << "evaluations=" << result.evaluations << '\n';
  os << "trace=";
  for (std::size_t i = 0; i < result.trace.size(); ++i) os << (i ? "," : "") << format_real(result.trace[i]);
  os << '\n';
  for (const auto& ind : result.population)
    os << "population=" << format_real(ind.score) << '|' << format_real(ind.theta_mb) << '|' << ind.psi << '|'
       << encode_cell_inline(ind.cell) << '\n';
  return os.str();
}

}  // namespace swapnas
