#pragma once

#include <cstdint>
#include <string>

#include "swapnas/errors.hpp"
#include "swapnas/network.hpp"

namespace swapnas {

/// Signum indicator on a post-ReLU value: 1 for any positive value
/// (no epsilon threshold), 0 for zero. Negative input is a contract error.
inline bool binarise_indicator(double x) {
  if (!(x >= 0.0)) throw ContractError("binarise_indicator: post-activation value must be finite and >= 0");
  return x > 0.0;
}

/// |A|: number of distinct per-sample patterns (columns of the capture).
std::size_t standard_pattern_cardinality(const ActivationCapture& capture);

/// SWAP-Score: number of distinct per-value patterns across samples (rows).
std::size_t swap_score(const ActivationCapture& capture);

/// Centre (mu) and width (sigma) of the size regulariser, in the unit of
/// theta (megabytes by default). Both must be positive.
class RegularisationParams {
 public:
  RegularisationParams(double mu, double sigma);
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }
  friend bool operator==(const RegularisationParams&, const RegularisationParams&) = default;

 private:
  double mu_;
  double sigma_;
};

/// exp(-(theta - mu)^2 / sigma), in (0, 1] up to underflow.
double regularisation_factor(double theta, const RegularisationParams& params);

/// psi * regularisation_factor(theta, params).
double regularised_swap_score(std::uint64_t psi, double theta, const RegularisationParams& params);

/// Scores and provenance for one evaluated architecture.
struct ScoreRecord {
  std::string arch_id;
  std::uint64_t seed = 0;
  std::uint64_t psi = 0;
  double psi_reg = 0.0;
  std::uint64_t card_a = 0;  // standard-pattern cardinality |A|
  std::uint64_t values = 0;  // V
  double theta_mb = 0.0;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::string batch;
};

}  // namespace swapnas
