#ifndef TORDIFF_TPD_HPP_
#define TORDIFF_TPD_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tordiff/rng.hpp"
#include "tordiff/torus.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

/// Transition density approximations for the WN process.
enum class TpdKind { euler, shoji_ozaki, wou };

inline constexpr TpdKind kAllTpdKinds[] = {TpdKind::euler, TpdKind::shoji_ozaki, TpdKind::wou};

/// "E", "SO", "WOU".
std::string_view to_string(TpdKind kind);
/// Accepts the short names above or euler / shoji-ozaki / wou, case-insensitive.
TpdKind parse_tpd_kind(std::string_view name);

/// Observations Theta_0, Theta_delta, ..., Theta_{N delta}.
struct Trajectory {
  double delta = 1.0;
  std::vector<TorusPoint> points;

  int dim() const { return points.empty() ? 0 : points.front().dim(); }
  std::size_t transitions() const { return points.empty() ? 0 : points.size() - 1; }
  /// Throws InvalidArgument unless delta > 0, N >= 1 and all points share a dimension.
  void validate() const;

  bool operator==(const Trajectory&) const = default;
};

/// Every `stride`-th point, keeping `transitions` transitions (delta scaled by stride).
Trajectory subsample(const Trajectory& traj, std::size_t stride, std::size_t transitions);

/// Euler pseudo-tpd f_WN(theta; phi + b(phi) delta, Sigma delta).
double euler_tpd(const TorusPoint& theta, const TorusPoint& phi, const WnParams& params, double delta,
                 WindingTruncation trunc);

/// Shoji-Ozaki pseudo-tpd. Falls back to euler_tpd when the drift Jacobian at phi has an
/// eigenvalue with real part > -1e-8 or the linearised covariance is not positive definite.
double shoji_ozaki_tpd(const TorusPoint& theta, const TorusPoint& phi, const WnParams& params, double delta,
                       WindingTruncation trunc);

/// Wrapped-OU approximation: winding-weighted mixture of wrapped normals with covariance Gamma_t.
double wou_tpd(const TorusPoint& theta, const TorusPoint& theta_s, const WnParams& params, double t,
               WindingTruncation trunc);

double tpd(TpdKind kind, const TorusPoint& theta, const TorusPoint& from, const WnParams& params, double t,
           WindingTruncation trunc);
double log_tpd(TpdKind kind, const TorusPoint& theta, const TorusPoint& from, const WnParams& params, double t,
               WindingTruncation trunc);

/// Mean (unwrapped) and covariance of one linearised-drift step.
struct LinearisedMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  bool fallback = false;
};

/// E = phi + J^{-1}(exp(J delta) - I) b and V = (1/2) J^{-1}(exp(2 J delta) - I) V0 for an
/// arbitrary drift value b and Jacobian J at phi. No wrapping and no fallback.
LinearisedMoments linearised_moments(const Eigen::VectorXd& phi, const Eigen::VectorXd& drift,
                                     const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& diffusion,
                                     double delta);

/// Shoji-Ozaki moments of the WN process at phi, including the fallback decision.
LinearisedMoments shoji_ozaki_moments(const TorusPoint& phi, const WnParams& params, double delta,
                                      WindingTruncation trunc);

/// Fine-step Euler-Maruyama path with n observations after theta0 at spacing delta,
/// each made of refine_m internal steps of size delta / refine_m.
Trajectory simulate_euler(const WnParams& params, const TorusPoint& theta0, double delta, std::size_t n,
                          std::size_t refine_m, Rng& rng, WindingTruncation trunc = WindingTruncation(2));
Trajectory simulate_euler(const WnParams& params, const TorusPoint& theta0, double delta, std::size_t n,
                          std::size_t refine_m, std::uint64_t seed, WindingTruncation trunc = WindingTruncation(2));

/// One draw from the wrapped-OU approximation started at theta_s.
TorusPoint sample_wou(const TorusPoint& theta_s, const WnParams& params, double t, WindingTruncation trunc, Rng& rng);
TorusPoint sample_wou(const TorusPoint& theta_s, const WnParams& params, double t, WindingTruncation trunc,
                      std::uint64_t seed);

/// One draw from the stationary distribution WN(mu, (1/2) A^{-1} Sigma).
TorusPoint sample_stationary(const WnParams& params, Rng& rng);

}  // namespace tordiff

#endif  // TORDIFF_TPD_HPP_
