#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swapnas/cell.hpp"
#include "swapnas/network.hpp"

namespace swapnas {

/// How a cell is stacked into a full network:
///   stem conv 3x3 (input_channels -> stem_channels, ReLU)
///   depth x cell, with a reduction block before every cell index listed in
///   reduction_points (3x3 stride-2 conv doubling channels, plus a 1x1
///   stride-2 projection shortcut, summed)
///   optional head: global average pool + linear classifier.
struct AssemblyConfig {
  int depth = 3;
  int stem_channels = 16;
  int input_channels = 3;
  std::vector<int> reduction_points{1, 2};
  bool head = true;
  int num_classes = 10;
  /// Count conv/dense biases in the parameter total. Biases are zero at init.
  bool count_biases = false;

  void validate() const;
  std::string to_string() const;
  friend bool operator==(const AssemblyConfig&, const AssemblyConfig&) = default;
};

/// Flattens a cell and an assembly config into a layer DAG. Edge ops become
/// layers, nodes become sums of their incoming edges.
LayerGraph assemble_descriptor(const CellMatrix& cell, const AssemblyConfig& cfg);

/// Validates the cell, assembles it and draws weights from `seed`.
NetworkInstance build_network(const CellMatrix& cell, const AssemblyConfig& cfg, std::uint64_t seed);

struct BaselineMetrics {
  std::uint64_t params = 0;
  double theta_mb = 0.0;  // 4 bytes per parameter, 2^20 bytes per MB
  std::uint64_t flops = 0;  // multiply-accumulates
};

inline double params_to_mb(std::uint64_t params, double bytes_per_param = 4.0) {
  return static_cast<double>(params) * bytes_per_param / 1048576.0;
}

/// Closed-form parameter count (theta) of the assembled network.
BaselineMetrics count_parameters(const CellMatrix& cell, const AssemblyConfig& cfg);

/// Closed-form multiply-accumulate count for one sample: per weighted layer,
/// weight count times output positions.
std::uint64_t count_flops(const CellMatrix& cell, const AssemblyConfig& cfg, const Shape& input);

/// Both baselines at once.
BaselineMetrics baseline_metrics(const CellMatrix& cell, const AssemblyConfig& cfg, const Shape& input);

}  // namespace swapnas
