#ifndef TORDIFF_INFERENCE_HPP_
#define TORDIFF_INFERENCE_HPP_

#include <array>
#include <optional>

#include "tordiff/exec.hpp"
#include "tordiff/tpd.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

struct FitConfig {
  TpdKind kind = TpdKind::wou;
  bool include_stationary_start = true;
  /// Known (sigma1, sigma2); the second entry is ignored for p = 1.
  std::optional<std::array<double, 2>> fix_sigma;
  double ftol = 1e-8;
  int max_evaluations = 10000;
  /// Winding truncation; when unset, default_truncation of the evaluated parameters for
  /// loglik and of the starting point for a whole fit.
  std::optional<WindingTruncation> trunc;

  /// Throws ConfigError unless ftol > 0, max_evaluations >= 10 and fixed sigmas are positive.
  void validate() const;
};

struct FitResult {
  WnParams params;
  double loglik = 0.0;
  bool converged = false;
  int evaluations = 0;

  bool operator==(const FitResult&) const = default;
};

/// Approximate log-likelihood: log f_stat(Theta_0) (if enabled) plus the sum of log tpds
/// over the transitions. Throws NumericError with the transition index on a non-finite term.
/// The serial and parallel routes give identical results.
double loglik(const Trajectory& traj, const WnParams& params, const FitConfig& cfg, Exec exec = Exec::serial);

/// Moment-matching start: circular means for mu, alpha_i = sigma_i^2 / (2 s_i) with
/// s_i = -2 log Rbar_i (capped at 1e3), alpha3 = 0 and sigma_i from the quadratic
/// variation unless fixed. Needs N >= 10 transitions; throws InitDegenerate if some
/// mean resultant length is below 1e-6.
WnParams stationary_init(const Trajectory& traj, const std::optional<std::array<double, 2>>& fix_sigma = {});

/// Nelder-Mead maximisation of loglik over (log alpha1, log alpha2, eta, mu1, mu2
/// [, log sigma1, log sigma2]) with alpha3 = tanh(eta) sqrt(alpha1 alpha2), from
/// stationary_init or the given start. Throws FitFailed if no evaluation is finite.
FitResult fit_mle(const Trajectory& traj, const FitConfig& cfg);
FitResult fit_mle(const Trajectory& traj, const FitConfig& cfg, const WnParams& start);

}  // namespace tordiff

#endif  // TORDIFF_INFERENCE_HPP_
