#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swapnas/assembly.hpp"
#include "swapnas/cell.hpp"
#include "swapnas/scoring.hpp"

namespace swapnas {

// ---------------------------------------------------------------------------
// Ground-truth tables
//
// CSV with header `arch_id,cell,accuracy[,size_mb]`; `cell` is the inline
// cell encoding ("nodes=4;matrix=0 1 ..."). LF and CRLF both accepted.

struct BenchmarkEntry {
  std::string arch_id;
  CellMatrix cell;
  double accuracy = 0.0;
  std::optional<double> size_mb;
};

class BenchmarkTable {
 public:
  BenchmarkTable() = default;
  explicit BenchmarkTable(std::vector<BenchmarkEntry> entries);

  const std::vector<BenchmarkEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const BenchmarkEntry* find(const std::string& arch_id) const;

 private:
  std::vector<BenchmarkEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

BenchmarkTable parse_accuracy_table(const std::string& csv);
BenchmarkTable load_accuracy_table(const std::filesystem::path& path);
std::string format_accuracy_table(const BenchmarkTable& table);

/// Score CSV: arch_id,seed,psi,psi_reg,card_a,values,theta_mb,params,flops,batch
std::string format_score_records(std::span<const ScoreRecord> records);
std::vector<ScoreRecord> parse_score_records(const std::string& csv);

/// Scores every table entry on one shared batch; entry i uses weight seed
/// seed ^ i. Records carry `seed` itself so they group by run.
std::vector<ScoreRecord> score_table(const BenchmarkTable& table, const InputBatch& batch, std::uint64_t seed,
                                     const ScoringSetup& setup);

// ---------------------------------------------------------------------------
// Statistics

/// 1-based ranks, ties receive the mean of the positions they occupy.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws StatisticsError when fewer
/// than two values are given or either side has zero rank variance.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Rounds a positive value up to two significant figures (30.7 -> 31).
double round_up_two_significant(double v);

/// mu = sigma = max(sizes) rounded up to two significant figures.
RegularisationParams estimate_mu_sigma(std::span<const double> sizes);

/// Theta (MB) of `count` random cells, for estimating mu/sigma of a space.
std::vector<double> sample_sizes(int nodes, const AssemblyConfig& cfg, int count, std::uint64_t seed);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  double width = 0.0;
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the maximum falls in the last bin.
Histogram size_histogram(std::span<const double> sizes, std::size_t bins);

// ---------------------------------------------------------------------------
// Correlation reports

struct MetricCorrelations {
  std::optional<double> psi;
  std::optional<double> psi_reg;
  std::optional<double> theta;
  std::optional<double> flops;
  std::size_t samples = 0;
};

struct CorrelationReport {
  std::vector<std::pair<std::uint64_t, MetricCorrelations>> per_seed;  // ascending seed
  MetricCorrelations mean;  // arithmetic mean over seeds (unset if any seed is unset)
};

/// Spearman rho of psi, psi_reg, theta and flops against accuracy, for each
/// seed group of `records` matched to `table` by arch_id.
CorrelationReport correlation_report(std::span<const ScoreRecord> records, const BenchmarkTable& table);
std::string format_correlation_report(const CorrelationReport& report);

struct SweepRow {
  std::optional<double> mu;  // unset: the no-regularisation row
  std::optional<double> sigma;
  std::vector<std::optional<double>> rho;  // per seed group, ascending seed
  std::optional<double> mean;
};

/// Spearman rho of psi * f(theta) vs accuracy for every (mu, sigma) in
/// `grid`, preceded by the unregularised row.
std::vector<SweepRow> mu_sigma_sweep(std::span<const ScoreRecord> records, const BenchmarkTable& table,
                                     std::span<const std::pair<double, double>> grid);
std::string format_sweep(const std::vector<SweepRow>& rows, std::span<const std::uint64_t> seeds);
std::vector<std::uint64_t> seed_groups(std::span<const ScoreRecord> records);

// ---------------------------------------------------------------------------
// Input-dimension ablation

struct AblationOptions {
  AssemblyConfig assembly;
  CaptureOptions capture{.standardise = false};
  /// Near-duplicate batch jitter (see BatchSpec); 0 gives i.i.d. samples.
  double jitter = 0.005;
  std::uint64_t seed = 0;
  /// Estimated from the cells' sizes when unset.
  std::optional<RegularisationParams> regularisation;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

MeanStd mean_std(std::span<const double> v);

struct AblationRow {
  Shape dims;
  MeanStd card_a;
  MeanStd psi;
  MeanStd psi_reg;
  std::optional<double> rho_card_a;
  std::optional<double> rho_psi;
  std::optional<double> rho_psi_reg;
  std::vector<ScoreRecord> records;
};

/// Scores every cell at every input shape (one batch of `samples` per shape,
/// cell i uses weight seed seed ^ i). `accuracy`, when given, aligns with
/// `cells` and adds Spearman rho columns.
std::vector<AblationRow> input_dim_ablation(std::span<const CellMatrix> cells, std::span<const Shape> dims,
                                            int samples, const AblationOptions& options,
                                            std::optional<std::span<const double>> accuracy = std::nullopt);
std::string format_ablation(const std::vector<AblationRow>& rows);

/// "series,x,y" lines for external plotting.
struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};
std::string format_plot_data(std::span<const PlotSeries> series);

}  // namespace swapnas
