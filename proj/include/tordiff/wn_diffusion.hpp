#ifndef TORDIFF_WN_DIFFUSION_HPP_
#define TORDIFF_WN_DIFFUSION_HPP_

#include <functional>

#include <Eigen/Dense>

#include "tordiff/torus.hpp"

namespace tordiff {

/// Parameters (A, mu, Sigma) of the wrapped-normal process. For p = 2,
/// A = (alpha1, (sigma1/sigma2) alpha3; (sigma2/sigma1) alpha3, alpha2) and
/// Sigma = diag(sigma1^2, sigma2^2), which keeps A^{-1} Sigma a covariance matrix
/// whenever alpha1, alpha2 > 0 and alpha3^2 < alpha1 alpha2. For p = 1 only
/// (alpha, mu, sigma) are used. Instances always satisfy these constraints.
class WnParams {
 public:
  /// The circular process alpha = 1, mu = 0, sigma = 1.
  WnParams() = default;

  /// Throws ConstraintViolation for alpha <= 0 or sigma <= 0.
  static WnParams circular(double alpha, double mu, double sigma);
  /// Throws ConstraintViolation unless alpha1, alpha2, sigma1, sigma2 > 0 and alpha3^2 < alpha1 alpha2.
  static WnParams toroidal(double alpha1, double alpha2, double alpha3, const TorusPoint& mu, double sigma1,
                           double sigma2);

  int dim() const noexcept { return mu_.dim(); }
  double alpha1() const noexcept { return alpha1_; }
  double alpha2() const noexcept { return alpha2_; }
  double alpha3() const noexcept { return alpha3_; }
  double sigma1() const noexcept { return sigma1_; }
  double sigma2() const noexcept { return sigma2_; }
  const TorusPoint& mu() const noexcept { return mu_; }

  WnParams with_mu(const TorusPoint& mu) const;
  WnParams with_sigma(double sigma1, double sigma2) const;

  bool operator==(const WnParams&) const = default;

 private:
  double alpha1_ = 1.0;
  double alpha2_ = 1.0;
  double alpha3_ = 0.0;
  TorusPoint mu_;
  double sigma1_ = 1.0;
  double sigma2_ = 1.0;
};

/// Drift matrix A (p x p).
Eigen::MatrixXd build_drift_matrix(const WnParams& params);
/// Diffusion matrix Sigma = diag(sigma_i^2) (p x p).
Eigen::MatrixXd diffusion_matrix(const WnParams& params);
/// Stationary covariance (1/2) A^{-1} Sigma. Throws InvalidArgument if A is singular.
Eigen::MatrixXd stationary_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma);
Eigen::MatrixXd stationary_cov(const WnParams& params);

/// Winding truncation for the stationary spread of params (WindingTruncation::for_spread of
/// the largest stationary marginal sd). Gamma_t never exceeds the stationary covariance.
WindingTruncation default_truncation(const WnParams& params);

/// A 2*pi-periodic drift b(theta) on T^p.
class DriftField {
 public:
  enum class Family { wrapped_normal, von_mises, langevin };
  using Function = std::function<Eigen::VectorXd(const TorusPoint&)>;

  DriftField(Family family, int dim, Function fn);

  Eigen::VectorXd operator()(const TorusPoint& theta) const;
  Family family() const noexcept { return family_; }
  int dim() const noexcept { return dim_; }

 private:
  Family family_;
  int dim_;
  Function fn_;
};

/// Constant-coefficient Langevin drift b = (1/2) Sigma grad log f.
DriftField langevin_drift(DriftField::Function log_density_gradient, const Eigen::MatrixXd& Sigma);
DriftField wn_drift_field(const WnParams& params, WindingTruncation trunc);
DriftField vm_drift_field(double alpha, double mu);

/// WN process drift A(mu - theta - sum_k 2k pi w_k(theta)).
Eigen::VectorXd wn_drift(const TorusPoint& theta, const WnParams& params, WindingTruncation trunc);
/// Analytic Jacobian of wn_drift.
Eigen::MatrixXd wn_drift_jacobian(const TorusPoint& theta, const WnParams& params, WindingTruncation trunc);

/// von Mises process drift alpha sin(mu - theta).
double vm_drift(const TorusPoint& theta, double alpha, double mu);

/// Coefficients of exp(tA) = a(t) I + b(t) A for a 2x2 matrix A.
struct ExpCoefficients {
  double a;
  double b;
};
ExpCoefficients exp_coefficients_2x2(const Eigen::Matrix2d& A, double t);

/// exp(tA) in closed form.
Eigen::Matrix2d mat_exp_2x2(const Eigen::Matrix2d& A, double t);

/// Gamma_t = int_0^t exp(-sA) Sigma exp(-sA') ds, for A^{-1} Sigma symmetric (p x p, p in {1, 2}).
/// Throws InvalidArgument if A is singular.
Eigen::MatrixXd gamma_t(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, double t);

}  // namespace tordiff

#endif  // TORDIFF_WN_DIFFUSION_HPP_
