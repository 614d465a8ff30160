#include "tordiff/wn_diffusion.hpp"

#include <cmath>
#include <utility>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/errors.hpp"

namespace tordiff {

namespace {

void require_positive(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite");
  if (!(v > 0.0)) throw ConstraintViolation(std::string(name) + " must be positive");
}

}  // namespace

WnParams WnParams::circular(double alpha, double mu, double sigma) {
  require_positive(alpha, "alpha");
  require_positive(sigma, "sigma");
  WnParams p;
  p.alpha1_ = alpha;
  p.mu_ = TorusPoint(mu);
  p.sigma1_ = sigma;
  return p;
}

WnParams WnParams::toroidal(double alpha1, double alpha2, double alpha3, const TorusPoint& mu, double sigma1,
                            double sigma2) {
  require_positive(alpha1, "alpha1");
  require_positive(alpha2, "alpha2");
  require_positive(sigma1, "sigma1");
  require_positive(sigma2, "sigma2");
  if (!std::isfinite(alpha3)) throw InvalidArgument("alpha3 must be finite");
  if (mu.dim() != 2) throw InvalidArgument("toroidal parameters need a 2-dimensional mu");
  if (!(alpha3 * alpha3 < alpha1 * alpha2)) throw ConstraintViolation("alpha3^2 must be smaller than alpha1*alpha2");
  WnParams p;
  p.alpha1_ = alpha1;
  p.alpha2_ = alpha2;
  p.alpha3_ = alpha3;
  p.mu_ = mu;
  p.sigma1_ = sigma1;
  p.sigma2_ = sigma2;
  return p;
}

WnParams WnParams::with_mu(const TorusPoint& mu) const {
  if (mu.dim() != dim()) throw InvalidArgument("with_mu: dimension mismatch");
  WnParams p = *this;
  p.mu_ = mu;
  return p;
}

WnParams WnParams::with_sigma(double sigma1, double sigma2) const {
  if (dim() == 1) return circular(alpha1_, mu_[0], sigma1);
  return toroidal(alpha1_, alpha2_, alpha3_, mu_, sigma1, sigma2);
}

Eigen::MatrixXd build_drift_matrix(const WnParams& params) {
  if (params.dim() == 1) return Eigen::MatrixXd::Constant(1, 1, params.alpha1());
  Eigen::MatrixXd a(2, 2);
  const double r = params.sigma1() / params.sigma2();
  a << params.alpha1(), r * params.alpha3(), params.alpha3() / r, params.alpha2();
  return a;
}

Eigen::MatrixXd diffusion_matrix(const WnParams& params) {
  if (params.dim() == 1) return Eigen::MatrixXd::Constant(1, 1, params.sigma1() * params.sigma1());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = params.sigma1() * params.sigma1();
  s(1, 1) = params.sigma2() * params.sigma2();
  return s;
}

Eigen::MatrixXd stationary_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma) {
  if (A.rows() != A.cols() || Sigma.rows() != A.rows() || Sigma.cols() != A.cols())
    throw InvalidArgument("stationary_cov: shape mismatch");
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible() || lu.determinant() == 0.0) throw InvalidArgument("stationary_cov: drift matrix is singular");
  Eigen::MatrixXd s = 0.5 * lu.solve(Sigma);
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  return sym;
}

Eigen::MatrixXd stationary_cov(const WnParams& params) {
  if (params.dim() == 1) {
    return Eigen::MatrixXd::Constant(1, 1, params.sigma1() * params.sigma1() / (2.0 * params.alpha1()));
  }
  // Closed form; agrees with the generic inverse above.
  const double det = params.alpha1() * params.alpha2() - params.alpha3() * params.alpha3();
  const double s1 = params.sigma1();
  const double s2 = params.sigma2();
  Eigen::MatrixXd s(2, 2);
  s << params.alpha2() * s1 * s1, -params.alpha3() * s1 * s2, -params.alpha3() * s1 * s2, params.alpha1() * s2 * s2;
  return s / (2.0 * det);
}

DriftField::DriftField(Family family, int dim, Function fn) : family_(family), dim_(dim), fn_(std::move(fn)) {
  if (dim != 1 && dim != 2) throw InvalidArgument("drift field dimension must be 1 or 2");
}

Eigen::VectorXd DriftField::operator()(const TorusPoint& theta) const {
  if (theta.dim() != dim_) throw InvalidArgument("drift field: dimension mismatch");
  return fn_(theta);
}

DriftField langevin_drift(DriftField::Function log_density_gradient, const Eigen::MatrixXd& Sigma) {
  if (Sigma.rows() != Sigma.cols() || (Sigma.rows() != 1 && Sigma.rows() != 2))
    throw InvalidArgument("langevin_drift: Sigma must be 1x1 or 2x2");
  const int dim = static_cast<int>(Sigma.rows());
  return DriftField(DriftField::Family::langevin, dim,
                    [grad = std::move(log_density_gradient), Sigma](const TorusPoint& theta) -> Eigen::VectorXd {
                      return 0.5 * Sigma * grad(theta);
                    });
}

DriftField wn_drift_field(const WnParams& params, WindingTruncation trunc) {
  return DriftField(DriftField::Family::wrapped_normal, params.dim(),
                    [params, trunc](const TorusPoint& theta) { return wn_drift(theta, params, trunc); });
}

DriftField vm_drift_field(double alpha, double mu) {
  return DriftField(DriftField::Family::von_mises, 1, [alpha, mu](const TorusPoint& theta) {
    return Eigen::VectorXd::Constant(1, vm_drift(theta, alpha, mu));
  });
}

Eigen::VectorXd wn_drift(const TorusPoint& theta, const WnParams& params, WindingTruncation trunc) {
  if (theta.dim() != params.dim()) throw InvalidArgument("wn_drift: dimension mismatch");
  return detail::with_dim(params.dim(), [&](auto pc) -> Eigen::VectorXd {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    return model.drift(detail::to_vec<P>(theta));
  });
}

Eigen::MatrixXd wn_drift_jacobian(const TorusPoint& theta, const WnParams& params, WindingTruncation trunc) {
  if (theta.dim() != params.dim()) throw InvalidArgument("wn_drift_jacobian: dimension mismatch");
  return detail::with_dim(params.dim(), [&](auto pc) -> Eigen::MatrixXd {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    detail::Vec<P> b;
    detail::Mat<P> j;
    model.drift_jacobian(detail::to_vec<P>(theta), b, j);
    return j;
  });
}

double vm_drift(const TorusPoint& theta, double alpha, double mu) {
  if (theta.dim() != 1) throw InvalidArgument("vm_drift is defined on the circle");
  if (!(alpha > 0.0)) throw ConstraintViolation("alpha must be positive");
  return alpha * std::sin(mu - theta[0]);
}

ExpCoefficients exp_coefficients_2x2(const Eigen::Matrix2d& A, double t) {
  const double s = 0.5 * A.trace();
  const double h = 0.5 * (A(0, 0) - A(1, 1));
  // det(A - sI); negative for real distinct eigenvalues s +- q.
  const double delta = -h * h - A(0, 1) * A(1, 0);
  const double q = std::sqrt(std::abs(delta));
  const double qt = q * t;
  double ch;   // e^{st} cosh(qt)  or  e^{st} cos(qt)
  double shq;  // e^{st} sinh(qt)/q  or  e^{st} sin(qt)/q
  if (std::abs(qt) < 1e-6) {
    const double sgn = delta < 0.0 ? 1.0 : -1.0;
    const double est = std::exp(s * t);
    ch = est * (1.0 + sgn * qt * qt / 2.0);
    shq = est * t * (1.0 + sgn * qt * qt / 6.0);
  } else if (delta < 0.0) {
    if (std::abs(qt) <= 1.0) {
      const double est = std::exp(s * t);
      ch = est * std::cosh(qt);
      shq = est * std::sinh(qt) / q;
    } else {
      const double ep = std::exp((s + q) * t);
      const double em = std::exp((s - q) * t);
      ch = 0.5 * (ep + em);
      shq = (ep - em) / (2.0 * q);
    }
  } else {
    const double est = std::exp(s * t);
    ch = est * std::cos(qt);
    shq = est * std::sin(qt) / q;
  }
  return {ch - s * shq, shq};
}

Eigen::Matrix2d mat_exp_2x2(const Eigen::Matrix2d& A, double t) {
  const ExpCoefficients c = exp_coefficients_2x2(A, t);
  return c.a * Eigen::Matrix2d::Identity() + c.b * A;
}

Eigen::MatrixXd gamma_t(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, double t) {
  if (A.rows() != A.cols() || Sigma.rows() != A.rows() || Sigma.cols() != A.cols())
    throw InvalidArgument("gamma_t: shape mismatch");
  if (A.rows() == 1) {
    if (A(0, 0) == 0.0) throw InvalidArgument("gamma_t: drift matrix is singular");
    return detail::gamma<1>(A, Sigma, t);
  }
  if (A.rows() == 2) {
    if (A.determinant() == 0.0) throw InvalidArgument("gamma_t: drift matrix is singular");
    return detail::gamma<2>(A, Sigma, t);
  }
  throw InvalidArgument("gamma_t: only 1x1 and 2x2 matrices are supported");
}

WindingTruncation default_truncation(const WnParams& params) {
  return WindingTruncation::for_spread(std::sqrt(stationary_cov(params).diagonal().maxCoeff()));
}

}  // namespace tordiff
