#include "swapnas/evo_search.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <sstream>

#include "swapnas/errors.hpp"
#include "swapnas/parallel.hpp"
#include "swapnas/text_format.hpp"

namespace swapnas {

namespace {

std::vector<std::pair<int, int>> edges_of(const CellMatrix& cell) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < cell.nodes(); ++i)
    for (int j = i + 1; j < cell.nodes(); ++j)
      if (cell.at(i, j) != 0) e.emplace_back(i, j);
  return e;
}

int uniform_index(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return static_cast<int>(d(rng));
}

}  // namespace

CellMatrix mutate_operation_at(const CellMatrix& cell, int from, int to, int new_code) {
  if (cell.at(from, to) == 0) throw ValidationError("no edge at the mutated position");
  if (new_code < 1 || new_code > kMaxOpCode || new_code == cell.at(from, to))
    throw ValidationError("operation mutation needs a different code in 1..4");
  CellMatrix out = cell;
  out.set(from, to, new_code);
  return out;
}

CellMatrix mutate_operation(const CellMatrix& cell, Rng& rng) {
  const auto edges = edges_of(cell);
  if (edges.empty()) throw ValidationError("cannot mutate the operation of an edgeless cell");
  const auto [i, j] = edges[static_cast<std::size_t>(uniform_index(edges.size(), rng))];
  // Uniform over the three codes different from the current one.
  int code = 1 + uniform_index(kMaxOpCode - 1, rng);
  if (code >= cell.at(i, j)) ++code;
  return mutate_operation_at(cell, i, j, code);
}

CellMatrix mutate_connectivity_at(const CellMatrix& cell, int from, int to, int new_from, int new_to) {
  if (cell.at(from, to) == 0) throw ValidationError("no edge to move at the given position");
  if (new_from >= new_to || cell.at(new_from, new_to) != 0)
    throw ValidationError("edge must move to an empty upper-triangular slot");
  CellMatrix out = cell;
  out.set(new_from, new_to, cell.at(from, to));
  out.set(from, to, 0);
  return out;
}

CellMatrix mutate_connectivity(const CellMatrix& cell, Rng& rng) {
  const auto edges = edges_of(cell);
  if (edges.empty()) throw ValidationError("cannot move an edge of an edgeless cell");
  std::vector<CellMatrix> moves;
  for (const auto& [i, j] : edges)
    for (int a = 0; a < cell.nodes(); ++a)
      for (int b = a + 1; b < cell.nodes(); ++b) {
        if (cell.at(a, b) != 0) continue;
        CellMatrix moved = mutate_connectivity_at(cell, i, j, a, b);
        if (is_valid_cell(moved)) moves.push_back(std::move(moved));
      }
  if (moves.empty()) throw ValidationError("connectivity mutation saturated: no legal edge move");
  return moves[static_cast<std::size_t>(uniform_index(moves.size(), rng))];
}

std::pair<CellMatrix, CellMatrix> crossover_at(const CellMatrix& a, const CellMatrix& b, int column) {
  if (a.nodes() != b.nodes()) throw ShapeError("crossover parents have different node counts");
  if (column < 0 || column >= a.nodes()) throw ShapeError("crossover column out of range");
  CellMatrix x = a, y = b;
  for (int i = 0; i < a.nodes(); ++i) {
    x.set(i, column, b.at(i, column));
    y.set(i, column, a.at(i, column));
  }
  return {std::move(x), std::move(y)};
}

std::pair<CellMatrix, CellMatrix> crossover(const CellMatrix& a, const CellMatrix& b, Rng& rng) {
  if (a.nodes() != b.nodes()) throw ShapeError("crossover parents have different node counts");
  std::vector<int> columns;
  for (int j = 1; j < a.nodes(); ++j) {
    auto kids = crossover_at(a, b, j);
    if (is_valid_cell(kids.first) && is_valid_cell(kids.second)) columns.push_back(j);
  }
  if (columns.empty()) return {a, b};
  return crossover_at(a, b, columns[static_cast<std::size_t>(uniform_index(columns.size(), rng))]);
}

// ---------------------------------------------------------------------------

void SearchConfig::validate() const {
  if (population < 2) throw ValidationError("population size must be >= 2");
  if (cycles < 0) throw ValidationError("search cycles must be >= 0");
  if (tournament_size() < 1 || tournament_size() > population)
    throw ValidationError("tournament sample size must be in [1, population]");
  if (mutation_times < 1) throw ValidationError("mutation_times must be >= 1");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0))
    throw ValidationError("crossover probability must be in [0, 1]");
  if (nodes < 2) throw ValidationError("cells need at least 2 nodes");
  scoring.assembly.validate();
}

std::string SearchConfig::fingerprint() const {
  std::ostringstream os;
  os << "P=" << population << ",S=" << tournament_size() << ",m=" << mutation_times
     << ",x=" << format_real(crossover_prob) << ",n=" << nodes << ",seed=" << seed << ",batch=" << batch.to_string()
     << ",asm=" << scoring.assembly.to_string() << ",std=" << scoring.capture.standardise;
  if (scoring.regularisation)
    os << ",mu=" << format_real(scoring.regularisation->mu()) << ",sigma=" << format_real(scoring.regularisation->sigma());
  return os.str();
}

CellScorer make_swap_scorer(const SearchConfig& cfg) {
  auto batch = std::make_shared<const InputBatch>(make_gaussian_batch(cfg.batch, cfg.seed));
  return [batch, setup = cfg.scoring, seed = cfg.seed](const CellMatrix& cell) {
    const std::uint64_t weight_seed = seed ^ stable_hash(encode_cell_inline(cell));
    const ScoreRecord r = score_cell(cell, *batch, weight_seed, setup);
    return CellScore{r.psi_reg, r.theta_mb, r.psi, weight_seed};
  };
}

bool better(const Individual& a, const Individual& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  if (a.cell != b.cell) return a.cell < b.cell;
  return a.order < b.order;
}

namespace {

// Worst = lowest score; ties go to the oldest insertion.
std::size_t worst_index(const std::vector<Individual>& pop) {
  std::size_t w = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (pop[i].score < pop[w].score || (pop[i].score == pop[w].score && pop[i].order < pop[w].order)) w = i;
  return w;
}

double best_score(const std::vector<Individual>& pop) {
  return std::max_element(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) {
           return better(b, a);
         })->score;
}

// Scores cells in parallel; results are in input order.
std::vector<Individual> evaluate(const std::vector<CellMatrix>& cells, const CellScorer& scorer, SearchState& state) {
  std::vector<CellScore> scores(cells.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    try {
      scores[i] = scorer(cells[i]);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " [cell " + encode_cell_inline(cells[i]) + "]");
    }
  });
  std::vector<Individual> out;
  out.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    out.push_back(Individual{cells[i], scores[i].score, scores[i].theta_mb, scores[i].psi, scores[i].seed, 0});
  state.evaluations += cells.size();
  return out;
}

}  // namespace

SearchState initialise_search(const SearchConfig& cfg, const CellScorer& scorer) {
  cfg.validate();
  SearchState state;
  state.fingerprint = cfg.fingerprint();
  state.rng.seed(derive_seed(cfg.seed, 0x5ea7c4));
  std::vector<CellMatrix> cells;
  for (int i = 0; i < cfg.population; ++i) cells.push_back(random_cell(cfg.nodes, state.rng));
  state.population = evaluate(cells, scorer, state);
  for (Individual& ind : state.population) ind.order = state.next_order++;
  state.trace.push_back(best_score(state.population));
  return state;
}

void run_cycles(SearchState& state, const SearchConfig& cfg, const CellScorer& scorer, int until,
                const std::function<void(const SearchState&)>& on_cycle) {
  cfg.validate();
  if (state.fingerprint != cfg.fingerprint())
    throw ValidationError("search state was produced by a different configuration");
  until = std::min(until, cfg.cycles);
  Rng& rng = state.rng;
  std::bernoulli_distribution do_crossover(cfg.crossover_prob);
  std::bernoulli_distribution op_mutation(0.5);

  while (state.cycle < until) {
    auto& pop = state.population;
    // Tournament: sample without replacement, rank best-first.
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto k = static_cast<std::size_t>(cfg.tournament_size());
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<Individual> candidates;
    for (std::size_t i = 0; i < k; ++i) candidates.push_back(pop[idx[i]]);
    std::sort(candidates.begin(), candidates.end(), better);

    CellMatrix parent = candidates[0].cell;
    if (candidates.size() >= 2 && do_crossover(rng)) {
      auto [x, y] = crossover(candidates[0].cell, candidates[1].cell, rng);
      auto kids = evaluate({x, y}, scorer, state);
      parent = better(kids[1], kids[0]) ? kids[1].cell : kids[0].cell;
    }

    std::vector<CellMatrix> mutants;
    for (int m = 0; m < cfg.mutation_times; ++m) {
      if (op_mutation(rng)) {
        mutants.push_back(mutate_operation(parent, rng));
      } else {
        try {
          mutants.push_back(mutate_connectivity(parent, rng));
        } catch (const ValidationError&) {
          mutants.push_back(mutate_operation(parent, rng));
        }
      }
    }
    auto children = evaluate(mutants, scorer, state);
    Individual child = *std::min_element(children.begin(), children.end(), better);
    child.order = state.next_order++;
    pop.push_back(std::move(child));
    pop.erase(pop.begin() + static_cast<std::ptrdiff_t>(worst_index(pop)));

    ++state.cycle;
    state.trace.push_back(best_score(pop));
    if (on_cycle) on_cycle(state);
  }
}

SearchResult finish_search(const SearchState& state) {
  SearchResult r;
  r.population = state.population;
  std::sort(r.population.begin(), r.population.end(), better);
  r.best = r.population.front();
  r.trace = state.trace;
  r.evaluations = state.evaluations;
  return r;
}

SearchResult run_search(const SearchConfig& cfg, const CellScorer& scorer) {
  SearchState state = initialise_search(cfg, scorer);
  run_cycles(state, cfg, scorer, cfg.cycles);
  return finish_search(state);
}

SearchResult run_search(const SearchConfig& cfg) { return run_search(cfg, make_swap_scorer(cfg)); }

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr std::string_view kCheckpointMagic = "swapnas-checkpoint v1";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw ParseError("bad integer '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad integer '" + s + "'", line);
  }
}

}  // namespace

std::string encode_checkpoint(const SearchState& state) {
  std::ostringstream os;
  os << kCheckpointMagic << '\n';
  os << "config=" << state.fingerprint << '\n';
  os << "cycle=" << state.cycle << '\n';
  os << "evaluations=" << state.evaluations << '\n';
  os << "next_order=" << state.next_order << '\n';
  os << "rng=" << state.rng << '\n';
  os << "trace=";
  for (std::size_t i = 0; i < state.trace.size(); ++i) os << (i ? "," : "") << format_real(state.trace[i]);
  os << '\n';
  for (const Individual& ind : state.population)
    os << "individual=" << ind.order << '|' << format_real(ind.score) << '|' << format_real(ind.theta_mb) << '|'
       << ind.psi << '|' << ind.seed << '|' << encode_cell_inline(ind.cell) << '\n';
  return os.str();
}

SearchState decode_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line) || (line != kCheckpointMagic && line != std::string(kCheckpointMagic) + "\r"))
    throw ParseError("not a swapnas checkpoint (expected '" + std::string(kCheckpointMagic) + "')", 1);
  SearchState state;
  bool have_rng = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("checkpoint line without '='", line_no);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "config") {
      state.fingerprint = value;
    } else if (key == "cycle") {
      state.cycle = static_cast<int>(parse_u64(value, line_no));
    } else if (key == "evaluations") {
      state.evaluations = parse_u64(value, line_no);
    } else if (key == "next_order") {
      state.next_order = parse_u64(value, line_no);
    } else if (key == "rng") {
      std::istringstream rs(value);
      rs >> state.rng;
      if (!rs) throw ParseError("bad rng state", line_no);
      have_rng = true;
    } else if (key == "trace") {
      for (const std::string& t : split(value, ',')) state.trace.push_back(parse_real(t));
    } else if (key == "individual") {
      const auto f = split(value, '|');
      if (f.size() != 6) throw ParseError("individual needs 6 '|'-separated fields", line_no);
      Individual ind;
      ind.order = parse_u64(f[0], line_no);
      ind.score = parse_real(f[1]);
      ind.theta_mb = parse_real(f[2]);
      ind.psi = parse_u64(f[3], line_no);
      ind.seed = parse_u64(f[4], line_no);
      ind.cell = decode_cell(f[5]);
      state.population.push_back(std::move(ind));
    } else {
      throw ParseError("unknown checkpoint key '" + key + "'", line_no);
    }
  }
  if (!have_rng) throw ParseError("checkpoint has no rng state");
  if (state.population.empty()) throw ParseError("checkpoint has no individuals");
  if (state.trace.size() != static_cast<std::size_t>(state.cycle) + 1)
    throw ParseError("checkpoint trace length does not match its cycle count");
  return state;
}

}  // namespace swapnas
