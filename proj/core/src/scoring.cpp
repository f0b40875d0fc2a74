#include "swapnas/scoring.hpp"

namespace swapnas {

ScoreRecord score_network(const NetworkInstance& net, const InputBatch& batch, const CaptureOptions& capture) {
  const ActivationCapture cap = forward_capture(net, batch, capture);
  ScoreRecord r;
  r.seed = net.seed();
  r.batch = batch.descriptor();
  r.values = cap.values();
  if (!cap.bits().empty()) {
    r.psi = swap_score(cap);
    r.card_a = standard_pattern_cardinality(cap);
  }
  r.psi_reg = static_cast<double>(r.psi);
  return r;
}

ScoreRecord score_cell(const CellMatrix& cell, const InputBatch& batch, std::uint64_t seed,
                       const ScoringSetup& setup) {
  const NetworkInstance net = build_network(cell, setup.assembly, seed);
  ScoreRecord r = score_network(net, batch, setup.capture);
  const BaselineMetrics base = baseline_metrics(cell, setup.assembly, batch.shape());
  r.params = base.params;
  r.theta_mb = base.theta_mb;
  r.flops = base.flops;
  r.psi_reg = setup.regularisation ? regularised_swap_score(r.psi, r.theta_mb, *setup.regularisation)
                                   : static_cast<double>(r.psi);
  return r;
}

}  // namespace swapnas
