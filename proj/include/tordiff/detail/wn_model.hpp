#ifndef TORDIFF_DETAIL_WN_MODEL_HPP_
#define TORDIFF_DETAIL_WN_MODEL_HPP_

#include <cmath>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff::detail {

/// exp(tM) for P = 1, 2.
template <int P>
Mat<P> expm(const Mat<P>& m, double t) {
  if constexpr (P == 1) {
    return Mat<1>(std::exp(m(0, 0) * t));
  } else {
    return mat_exp_2x2(m, t);
  }
}

/// Gamma_t for P = 1, 2; A^{-1} Sigma assumed symmetric.
template <int P>
Mat<P> gamma(const Mat<P>& a, const Mat<P>& sigma, double t) {
  if constexpr (P == 1) {
    const double alpha = a(0, 0);
    return Mat<1>(-sigma(0, 0) * std::expm1(-2.0 * alpha * t) / (2.0 * alpha));
  } else {
    const ExpCoefficients c = exp_coefficients_2x2(a, -2.0 * t);
    const Mat<2> stat = 0.5 * a.inverse() * sigma;
    Mat<2> g = (1.0 - c.a) * stat - 0.5 * c.b * sigma;
    g(0, 1) = g(1, 0) = 0.5 * (g(0, 1) + g(1, 0));
    return g;
  }
}

/// Precomputed WN process quantities for one parameter value.
template <int P>
struct WnModel {
  Mat<P> a;
  Mat<P> sigma;
  Vec<P> sigma_sd;  // sqrt of the diagonal of Sigma
  Vec<P> mu;
  WrappedGaussian<P> stationary;
  int half_width;

  WnModel(const WnParams& params, WindingTruncation trunc)
      : a(to_mat<P>(build_drift_matrix(params))),
        sigma(to_mat<P>(diffusion_matrix(params))),
        mu(to_vec<P>(params.mu())),
        stationary(to_mat<P>(stationary_cov(params)), trunc.half_width()),
        half_width(trunc.half_width()) {
    sigma_sd[0] = params.sigma1();
    if constexpr (P == 2) sigma_sd[1] = params.sigma2();
  }

  Vec<P> drift(const Vec<P>& theta) const { return -a * stationary.moments(theta - mu, false).mean; }

  void drift_jacobian(const Vec<P>& theta, Vec<P>& b, Mat<P>& j) const {
    const auto m = stationary.moments(theta - mu, true);
    b = -a * m.mean;
    j = -a * (Mat<P>::Identity() - m.cov * stationary.precision());
  }

  double log_stationary(const Vec<P>& theta) const { return stationary.log_density(theta - mu); }
};

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_WN_MODEL_HPP_
