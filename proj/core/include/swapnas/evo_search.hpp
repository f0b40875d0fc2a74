#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swapnas/cell.hpp"
#include "swapnas/scoring.hpp"

namespace swapnas {

// ---------------------------------------------------------------------------
// Variation operators

/// Replaces the code of one uniformly chosen edge with a different code.
/// Throws ValidationError when the cell has no edge.
CellMatrix mutate_operation(const CellMatrix& cell, Rng& rng);
CellMatrix mutate_operation_at(const CellMatrix& cell, int from, int to, int new_code);

/// Moves one edge (keeping its code) to an empty upper-triangular slot,
/// chosen uniformly among the moves that leave the cell valid. Throws
/// ValidationError when no such move exists.
CellMatrix mutate_connectivity(const CellMatrix& cell, Rng& rng);
CellMatrix mutate_connectivity_at(const CellMatrix& cell, int from, int to, int new_from, int new_to);

/// Exchanges every entry of one column (the incoming edges of one node)
/// between two parents. The column is drawn uniformly among those giving two
/// valid children; parents are returned unchanged if none does. Throws
/// ShapeError when node counts differ.
std::pair<CellMatrix, CellMatrix> crossover(const CellMatrix& a, const CellMatrix& b, Rng& rng);
std::pair<CellMatrix, CellMatrix> crossover_at(const CellMatrix& a, const CellMatrix& b, int column);

// ---------------------------------------------------------------------------
// Search

struct SearchConfig {
  int population = 16;
  int cycles = 100;
  int sample_size = 0;  // tournament size; 0 means ceil(population / 2)
  int mutation_times = 8;
  double crossover_prob = 0.5;
  int nodes = 4;
  std::uint64_t seed = 0;
  BatchSpec batch{32, 3, 32, 32, 0.0};
  ScoringSetup scoring;

  int tournament_size() const noexcept { return sample_size > 0 ? sample_size : (population + 1) / 2; }
  void validate() const;
  /// Stable text identifying everything that influences the search.
  std::string fingerprint() const;
};

struct CellScore {
  double score = 0.0;  // psi_reg
  double theta_mb = 0.0;
  std::uint64_t psi = 0;
  std::uint64_t seed = 0;
};

/// Scores cells. Implementations must be deterministic and thread-safe.
using CellScorer = std::function<CellScore(const CellMatrix&)>;

/// Regularised SWAP scorer for a search: one input batch shared by every
/// candidate (drawn from cfg.seed), weight seed = cfg.seed ^ hash(cell).
CellScorer make_swap_scorer(const SearchConfig& cfg);

struct Individual {
  CellMatrix cell;
  double score = 0.0;
  double theta_mb = 0.0;
  std::uint64_t psi = 0;
  std::uint64_t seed = 0;
  std::uint64_t order = 0;  // insertion counter, used for tie-breaks
};

/// Complete resumable state between two cycles.
struct SearchState {
  std::string fingerprint;
  int cycle = 0;
  std::uint64_t evaluations = 0;
  std::uint64_t next_order = 0;
  Rng rng;
  std::vector<Individual> population;
  std::vector<double> trace;  // best population score after each cycle
};

struct SearchResult {
  Individual best;
  std::vector<double> trace;  // cycles + 1 entries, entry 0 is the initial population
  std::uint64_t evaluations = 0;
  std::vector<Individual> population;
};

/// Fills the initial population with random scored cells (trace entry 0).
SearchState initialise_search(const SearchConfig& cfg, const CellScorer& scorer);

/// Runs cycles until state.cycle == until (clamped to cfg.cycles).
/// `on_cycle` is called after every cycle.
void run_cycles(SearchState& state, const SearchConfig& cfg, const CellScorer& scorer, int until,
                const std::function<void(const SearchState&)>& on_cycle = {});

SearchResult finish_search(const SearchState& state);

SearchResult run_search(const SearchConfig& cfg);
SearchResult run_search(const SearchConfig& cfg, const CellScorer& scorer);

/// Versioned text checkpoint ("swapnas-checkpoint v1").
std::string encode_checkpoint(const SearchState& state);
SearchState decode_checkpoint(const std::string& text);

/// Best-first order: higher score, then lexicographically smaller cell,
/// then older insertion.
bool better(const Individual& a, const Individual& b) noexcept;

}  // namespace swapnas
