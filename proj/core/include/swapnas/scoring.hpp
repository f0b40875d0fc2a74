#pragma once

#include <cstdint>
#include <optional>

#include "swapnas/assembly.hpp"
#include "swapnas/swap_metric.hpp"

namespace swapnas {

/// Everything needed to turn a cell into a ScoreRecord besides the cell,
/// the batch and the weight seed.
struct ScoringSetup {
  AssemblyConfig assembly;
  std::optional<RegularisationParams> regularisation;  // psi_reg = psi when unset
  CaptureOptions capture;
};

/// Builds the network, captures one batch, and fills every score field.
ScoreRecord score_cell(const CellMatrix& cell, const InputBatch& batch, std::uint64_t seed,
                       const ScoringSetup& setup);

/// Pattern counts only, on an already built network (theta, flops and
/// psi_reg are left for the caller; psi_reg is set to psi).
ScoreRecord score_network(const NetworkInstance& net, const InputBatch& batch, const CaptureOptions& capture);

}  // namespace swapnas
