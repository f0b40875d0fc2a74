#include "swapnas/swap_metric.hpp"

#include <cmath>

namespace swapnas {

std::size_t standard_pattern_cardinality(const ActivationCapture& capture) {
  if (capture.bits().empty()) throw ContractError("standard_pattern_cardinality: empty capture");
  return count_distinct_rows(capture.bits().transposed());
}

std::size_t swap_score(const ActivationCapture& capture) {
  if (capture.bits().empty()) throw ContractError("swap_score: empty capture");
  return count_distinct_rows(capture.bits());
}

RegularisationParams::RegularisationParams(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("regularisation mu must be a positive number");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ValidationError("regularisation sigma must be a positive number");
}

double regularisation_factor(double theta, const RegularisationParams& params) {
  const double d = theta - params.mu();
  return std::exp(-(d * d) / params.sigma());
}

double regularised_swap_score(std::uint64_t psi, double theta, const RegularisationParams& params) {
  return static_cast<double>(psi) * regularisation_factor(theta, params);
}

}  // namespace swapnas
