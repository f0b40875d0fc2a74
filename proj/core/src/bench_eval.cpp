#include "swapnas/bench_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "swapnas/errors.hpp"
#include "swapnas/io.hpp"
#include "swapnas/parallel.hpp"
#include "swapnas/text_format.hpp"

namespace swapnas {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return out;
}

// Lines without their terminators, CR stripped.
std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double parse_field_real(const std::string& s, std::size_t line, const char* column) {
  try {
    return parse_real(s);
  } catch (const ParseError&) {
    throw ParseError(std::string("column '") + column + "' is not a number: '" + s + "'", line);
  }
}

std::uint64_t parse_field_u64(const std::string& s, std::size_t line, const char* column) {
  std::uint64_t v = 0;
  std::istringstream is(s);
  if (!(is >> v) || !is.eof() || s.empty() || s.front() == '-')
    throw ParseError(std::string("column '") + column + "' is not a non-negative integer: '" + s + "'", line);
  return v;
}

std::map<std::string, std::size_t> header_index(const std::string& header_line,
                                                std::initializer_list<const char*> required) {
  std::map<std::string, std::size_t> idx;
  const auto header = split_fields(header_line);
  for (std::size_t i = 0; i < header.size(); ++i) idx[header[i]] = i;
  for (const char* col : required)
    if (!idx.count(col)) throw ParseError(std::string("schema error: missing column '") + col + "'", 1);
  return idx;
}

}  // namespace

BenchmarkTable::BenchmarkTable(std::vector<BenchmarkEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const BenchmarkEntry& e = entries_[i];
    if (!index_.emplace(e.arch_id, i).second) throw ValidationError("duplicate arch_id '" + e.arch_id + "'");
    if (!std::isfinite(e.accuracy) || e.accuracy < 0.0 || e.accuracy > 1.0)
      throw ValidationError("accuracy of '" + e.arch_id + "' outside [0,1]");
  }
}

const BenchmarkEntry* BenchmarkTable::find(const std::string& arch_id) const {
  auto it = index_.find(arch_id);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

BenchmarkTable parse_accuracy_table(const std::string& csv) {
  const auto lines = split_lines(csv);
  if (lines.empty()) throw ParseError("schema error: empty accuracy table", 1);
  const auto idx = header_index(lines[0], {"arch_id", "cell", "accuracy"});
  const auto size_col = idx.find("size_mb");
  const std::size_t width = split_fields(lines[0]).size();

  std::vector<BenchmarkEntry> entries;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    if (lines[n].empty()) continue;
    const auto f = split_fields(lines[n]);
    if (f.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()), line_no);
    BenchmarkEntry e;
    e.arch_id = f[idx.at("arch_id")];
    if (e.arch_id.empty()) throw ParseError("empty arch_id", line_no);
    if (auto [it, fresh] = seen.emplace(e.arch_id, line_no); !fresh)
      throw ParseError("duplicate arch_id '" + e.arch_id + "' (first seen on line " + std::to_string(it->second) + ")",
                       line_no);
    try {
      e.cell = decode_cell(f[idx.at("cell")]);
    } catch (const ParseError& err) {
      throw ParseError(std::string("bad cell: ") + err.what(), line_no);
    }
    e.accuracy = parse_field_real(f[idx.at("accuracy")], line_no, "accuracy");
    if (!std::isfinite(e.accuracy) || e.accuracy < 0.0 || e.accuracy > 1.0)
      throw ValidationError("accuracy " + f[idx.at("accuracy")] + " outside [0,1] (line " + std::to_string(line_no) + ")");
    if (size_col != idx.end() && !f[size_col->second].empty())
      e.size_mb = parse_field_real(f[size_col->second], line_no, "size_mb");
    entries.push_back(std::move(e));
  }
  return BenchmarkTable(std::move(entries));
}

BenchmarkTable load_accuracy_table(const std::filesystem::path& path) {
  return parse_accuracy_table(read_text_file(path));
}

std::string format_accuracy_table(const BenchmarkTable& table) {
  const bool sizes = std::any_of(table.entries().begin(), table.entries().end(),
                                 [](const BenchmarkEntry& e) { return e.size_mb.has_value(); });
  std::ostringstream os;
  os << "arch_id,cell,accuracy" << (sizes ? ",size_mb" : "") << '\n';
  for (const auto& e : table.entries()) {
    os << e.arch_id << ',' << encode_cell_inline(e.cell) << ',' << format_real(e.accuracy);
    if (sizes) os << ',' << (e.size_mb ? format_real(*e.size_mb) : "");
    os << '\n';
  }
  return os.str();
}

std::string format_score_records(std::span<const ScoreRecord> records) {
  std::ostringstream os;
  os << "arch_id,seed,psi,psi_reg,card_a,values,theta_mb,params,flops,batch\n";
  for (const auto& r : records)
    os << r.arch_id << ',' << r.seed << ',' << r.psi << ',' << format_real(r.psi_reg) << ',' << r.card_a << ','
       << r.values << ',' << format_real(r.theta_mb) << ',' << r.params << ',' << r.flops << ',' << r.batch << '\n';
  return os.str();
}

std::vector<ScoreRecord> parse_score_records(const std::string& csv) {
  const auto lines = split_lines(csv);
  if (lines.empty()) throw ParseError("schema error: empty score file", 1);
  const auto idx = header_index(lines[0], {"arch_id", "seed", "psi", "psi_reg", "theta_mb", "flops"});
  auto opt = [&](const char* name) -> std::optional<std::size_t> {
    auto it = idx.find(name);
    return it == idx.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };
  const auto card_col = opt("card_a"), values_col = opt("values"), params_col = opt("params"), batch_col = opt("batch");
  const std::size_t width = split_fields(lines[0]).size();
  std::vector<ScoreRecord> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    if (lines[n].empty()) continue;
    const auto f = split_fields(lines[n]);
    if (f.size() != width)
      throw ParseError("expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()), line_no);
    ScoreRecord r;
    r.arch_id = f[idx.at("arch_id")];
    r.seed = parse_field_u64(f[idx.at("seed")], line_no, "seed");
    r.psi = parse_field_u64(f[idx.at("psi")], line_no, "psi");
    r.psi_reg = parse_field_real(f[idx.at("psi_reg")], line_no, "psi_reg");
    r.theta_mb = parse_field_real(f[idx.at("theta_mb")], line_no, "theta_mb");
    r.flops = parse_field_u64(f[idx.at("flops")], line_no, "flops");
    if (card_col) r.card_a = parse_field_u64(f[*card_col], line_no, "card_a");
    if (values_col) r.values = parse_field_u64(f[*values_col], line_no, "values");
    if (params_col) r.params = parse_field_u64(f[*params_col], line_no, "params");
    if (batch_col) r.batch = f[*batch_col];
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreRecord> score_table(const BenchmarkTable& table, const InputBatch& batch, std::uint64_t seed,
                                     const ScoringSetup& setup) {
  std::vector<ScoreRecord> out(table.size());
  parallel_for(table.size(), [&](std::size_t i) {
    const BenchmarkEntry& e = table.entries()[i];
    out[i] = score_cell(e.cell, batch, seed ^ static_cast<std::uint64_t>(i), setup);
    out[i].arch_id = e.arch_id;
    out[i].seed = seed;
  });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman_rho: length mismatch");
  if (x.size() < 2) throw StatisticsError("spearman_rho needs at least two pairs");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ContractError("spearman_rho: non-finite value");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;  // mean rank is fixed under average ties
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mean) * (ry[i] - mean);
    dx += (rx[i] - mean) * (rx[i] - mean);
    dy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (dx == 0.0 || dy == 0.0) throw StatisticsError("spearman_rho undefined: zero rank variance");
  return std::clamp(num / std::sqrt(dx * dy), -1.0, 1.0);
}

double round_up_two_significant(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ContractError("round_up_two_significant needs a positive value");
  const int e = static_cast<int>(std::floor(std::log10(v)));
  // Work on the integer mantissa in [10, 100) so exact inputs stay exact.
  const int shift = 1 - e;
  const double scaled = shift >= 0 ? v * std::pow(10.0, shift) : v / std::pow(10.0, -shift);
  const double k = std::ceil(scaled * (1.0 - 1e-12));
  return shift >= 0 ? k / std::pow(10.0, shift) : k * std::pow(10.0, -shift);
}

RegularisationParams estimate_mu_sigma(std::span<const double> sizes) {
  if (sizes.size() < 2) throw StatisticsError("estimate_mu_sigma needs at least two sizes");
  const double m = round_up_two_significant(*std::max_element(sizes.begin(), sizes.end()));
  return RegularisationParams(m, m);
}

std::vector<double> sample_sizes(int nodes, const AssemblyConfig& cfg, int count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x512e));
  std::vector<double> sizes;
  sizes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) sizes.push_back(count_parameters(random_cell(nodes, rng), cfg).theta_mb);
  return sizes;
}

Histogram size_histogram(std::span<const double> sizes, std::size_t bins) {
  if (bins < 1) throw ContractError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(bins, 0);
  if (sizes.empty()) return h;
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  h.lo = *lo;
  h.hi = *hi;
  h.width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double s : sizes) {
    std::size_t b = h.width > 0.0 ? static_cast<std::size_t>((s - h.lo) / h.width) : 0;
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> try_rho(std::span<const double> x, std::span<const double> y) {
  try {
    return spearman_rho(x, y);
  } catch (const StatisticsError&) {
    return std::nullopt;
  }
}

struct Matched {
  std::vector<double> psi, psi_reg, theta, flops, accuracy;
  std::vector<const ScoreRecord*> records;
};

Matched match(std::span<const ScoreRecord> records, const BenchmarkTable& table, std::uint64_t seed) {
  Matched m;
  for (const auto& r : records) {
    if (r.seed != seed) continue;
    const BenchmarkEntry* e = table.find(r.arch_id);
    if (!e) continue;
    m.psi.push_back(static_cast<double>(r.psi));
    m.psi_reg.push_back(r.psi_reg);
    m.theta.push_back(r.theta_mb);
    m.flops.push_back(static_cast<double>(r.flops));
    m.accuracy.push_back(e->accuracy);
    m.records.push_back(&r);
  }
  if (m.accuracy.size() < 2)
    throw StatisticsError("insufficient data: fewer than 2 score records of seed " + std::to_string(seed) +
                          " match the accuracy table");
  return m;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (const auto& x : v) {
    if (!x) return std::nullopt;
    s += *x;
  }
  return s / static_cast<double>(v.size());
}

std::string opt_text(const std::optional<double>& v) { return v ? format_real(*v) : "nan"; }

}  // namespace

std::vector<std::uint64_t> seed_groups(std::span<const ScoreRecord> records) {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : records) seeds.push_back(r.seed);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  return seeds;
}

CorrelationReport correlation_report(std::span<const ScoreRecord> records, const BenchmarkTable& table) {
  const auto seeds = seed_groups(records);
  if (seeds.empty()) throw StatisticsError("insufficient data: no score records");
  CorrelationReport report;
  std::vector<std::optional<double>> psi, psi_reg, theta, flops;
  for (std::uint64_t seed : seeds) {
    const Matched m = match(records, table, seed);
    MetricCorrelations c;
    c.samples = m.accuracy.size();
    c.psi = try_rho(m.psi, m.accuracy);
    c.psi_reg = try_rho(m.psi_reg, m.accuracy);
    c.theta = try_rho(m.theta, m.accuracy);
    c.flops = try_rho(m.flops, m.accuracy);
    psi.push_back(c.psi);
    psi_reg.push_back(c.psi_reg);
    theta.push_back(c.theta);
    flops.push_back(c.flops);
    report.per_seed.emplace_back(seed, c);
  }
  report.mean.psi = mean_of(psi);
  report.mean.psi_reg = mean_of(psi_reg);
  report.mean.theta = mean_of(theta);
  report.mean.flops = mean_of(flops);
  report.mean.samples = report.per_seed.front().second.samples;
  return report;
}

std::string format_correlation_report(const CorrelationReport& report) {
  std::ostringstream os;
  os << "group,samples,swap_rho,swap_reg_rho,params_rho,flops_rho\n";
  auto row = [&](const std::string& group, const MetricCorrelations& c) {
    os << group << ',' << c.samples << ',' << opt_text(c.psi) << ',' << opt_text(c.psi_reg) << ','
       << opt_text(c.theta) << ',' << opt_text(c.flops) << '\n';
  };
  for (const auto& [seed, c] : report.per_seed) row("seed" + std::to_string(seed), c);
  row("mean", report.mean);
  return os.str();
}

std::vector<SweepRow> mu_sigma_sweep(std::span<const ScoreRecord> records, const BenchmarkTable& table,
                                     std::span<const std::pair<double, double>> grid) {
  if (grid.empty()) throw ContractError("mu/sigma sweep needs a non-empty grid");
  const auto seeds = seed_groups(records);
  std::vector<Matched> groups;
  for (std::uint64_t s : seeds) groups.push_back(match(records, table, s));

  std::vector<SweepRow> rows;
  SweepRow plain;
  for (const Matched& m : groups) plain.rho.push_back(try_rho(m.psi, m.accuracy));
  plain.mean = mean_of(plain.rho);
  rows.push_back(std::move(plain));

  for (const auto& [mu, sigma] : grid) {
    const RegularisationParams params(mu, sigma);
    SweepRow row;
    row.mu = mu;
    row.sigma = sigma;
    for (const Matched& m : groups) {
      std::vector<double> reg(m.psi.size());
      for (std::size_t i = 0; i < reg.size(); ++i)
        reg[i] = regularised_swap_score(m.records[i]->psi, m.theta[i], params);
      row.rho.push_back(try_rho(reg, m.accuracy));
    }
    row.mean = mean_of(row.rho);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_sweep(const std::vector<SweepRow>& rows, std::span<const std::uint64_t> seeds) {
  std::ostringstream os;
  os << "mu,sigma";
  for (auto s : seeds) os << ",seed" << s;
  os << ",mean\n";
  for (const auto& r : rows) {
    os << (r.mu ? format_real(*r.mu) : "N/A") << ',' << (r.sigma ? format_real(*r.sigma) : "N/A");
    for (const auto& v : r.rho) os << ',' << opt_text(v);
    os << ',' << opt_text(r.mean) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

MeanStd mean_std(std::span<const double> v) {
  MeanStd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

std::vector<AblationRow> input_dim_ablation(std::span<const CellMatrix> cells, std::span<const Shape> dims,
                                            int samples, const AblationOptions& options,
                                            std::optional<std::span<const double>> accuracy) {
  if (dims.empty()) throw ContractError("input-dimension ablation needs at least one input shape");
  if (cells.empty()) throw ContractError("input-dimension ablation needs at least one cell");
  if (accuracy && accuracy->size() != cells.size())
    throw ContractError("accuracy list must align with the cell list");

  std::optional<RegularisationParams> reg = options.regularisation;
  if (!reg) {
    std::vector<double> sizes;
    for (const auto& c : cells) sizes.push_back(count_parameters(c, options.assembly).theta_mb);
    if (sizes.size() == 1) sizes.push_back(sizes.front());
    reg = estimate_mu_sigma(sizes);
  }
  ScoringSetup setup{options.assembly, reg, options.capture};

  std::vector<AblationRow> rows;
  for (const Shape& d : dims) {
    BatchSpec spec{samples, d.channels, d.width, d.height, options.jitter};
    const InputBatch batch = make_gaussian_batch(spec, options.seed);
    AblationRow row;
    row.dims = d;
    row.records.resize(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
      row.records[i] = score_cell(cells[i], batch, options.seed ^ static_cast<std::uint64_t>(i), setup);
    });
    std::vector<double> a, p, pr;
    for (const auto& r : row.records) {
      a.push_back(static_cast<double>(r.card_a));
      p.push_back(static_cast<double>(r.psi));
      pr.push_back(r.psi_reg);
    }
    row.card_a = mean_std(a);
    row.psi = mean_std(p);
    row.psi_reg = mean_std(pr);
    if (accuracy) {
      row.rho_card_a = try_rho(a, *accuracy);
      row.rho_psi = try_rho(p, *accuracy);
      row.rho_psi_reg = try_rho(pr, *accuracy);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "channels,width,height,card_a_mean,card_a_std,psi_mean,psi_std,psi_reg_mean,psi_reg_std,"
        "card_a_rho,psi_rho,psi_reg_rho\n";
  for (const auto& r : rows)
    os << r.dims.channels << ',' << r.dims.width << ',' << r.dims.height << ',' << format_real(r.card_a.mean) << ','
       << format_real(r.card_a.std) << ',' << format_real(r.psi.mean) << ',' << format_real(r.psi.std) << ','
       << format_real(r.psi_reg.mean) << ',' << format_real(r.psi_reg.std) << ',' << opt_text(r.rho_card_a) << ','
       << opt_text(r.rho_psi) << ',' << opt_text(r.rho_psi_reg) << '\n';
  return os.str();
}

std::string format_plot_data(std::span<const PlotSeries> series) {
  std::ostringstream os;
  os << "series,x,y\n";
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) os << s.name << ',' << format_real(x) << ',' << format_real(y) << '\n';
  return os.str();
}

}  // namespace swapnas
