#ifndef TORDIFF_DETAIL_TRANSITION_HPP_
#define TORDIFF_DETAIL_TRANSITION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/tpd.hpp"

namespace tordiff::detail {

inline constexpr double kSoEigenCut = -1e-8;

/// Largest real part among the eigenvalues of a P x P matrix.
template <int P>
double max_eigen_real(const Mat<P>& m) {
  if constexpr (P == 1) {
    return m(0, 0);
  } else {
    const double s = 0.5 * m.trace();
    const double disc = s * s - m.determinant();
    return disc > 0.0 ? s + std::sqrt(disc) : s;
  }
}

template <int P>
bool positive_definite(const Mat<P>& m) {
  if constexpr (P == 1) {
    return m(0, 0) > 0.0 && std::isfinite(m(0, 0));
  } else {
    return m.allFinite() && m(0, 0) > 0.0 && m.determinant() > 0.0;
  }
}

/// Density of the approximate transition from a fixed starting point: a mixture of
/// wrapped normals sharing one covariance (a single component for E and SO).
template <int P>
struct Conditional {
  WrappedGaussian<P> gauss;
  std::array<Vec<P>, kMaxLattice> means;
  std::array<double, kMaxLattice> log_weights;
  int n = 0;

  double log_density(const Vec<P>& to) const {
    if (n == 1) return gauss.log_density(to - means[0]);
    std::array<double, kMaxLattice> terms;
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      terms[u] = log_weights[u] + gauss.log_density(to - means[u]);
      mx = std::max(mx, terms[u]);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::exp(terms[static_cast<std::size_t>(i)] - mx);
    return mx + std::log(acc);
  }
};

/// Approximate transition density of one kind over one time step for one model.
template <int P>
class TransitionDensity {
 public:
  TransitionDensity(TpdKind kind, const WnModel<P>& model, double t) : model_(&model), kind_(kind), t_(t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("transition time must be positive");
    euler_ = WrappedGaussian<P>(model.sigma * t, model.half_width);
    if (kind == TpdKind::wou) {
      decay_ = expm<P>(model.a, -t);
      wou_ = WrappedGaussian<P>(gamma<P>(model.a, model.sigma, t), model.half_width);
    }
  }

  TpdKind kind() const noexcept { return kind_; }

  void prepare(const Vec<P>& from, Conditional<P>& out) const {
    switch (kind_) {
      case TpdKind::euler:
        prepare_euler(from, out);
        return;
      case TpdKind::shoji_ozaki:
        prepare_so(from, out);
        return;
      case TpdKind::wou:
        prepare_wou(from, out);
        return;
    }
  }

  double log_density(const Vec<P>& to, const Vec<P>& from) const {
    Conditional<P> c;
    prepare(from, c);
    return c.log_density(to);
  }

  /// Linearised moments at `from`; `fallback` reports whether Euler is used instead.
  void so_moments(const Vec<P>& from, Vec<P>& mean, Mat<P>& cov, bool& fallback) const {
    Vec<P> b;
    Mat<P> j;
    model_->drift_jacobian(from, b, j);
    fallback = max_eigen_real<P>(j) > kSoEigenCut;
    if (!fallback) {
      const Mat<P> jinv = j.inverse();
      mean = from + jinv * (expm<P>(j, t_) - Mat<P>::Identity()) * b;
      cov = 0.5 * jinv * (expm<P>(j, 2.0 * t_) - Mat<P>::Identity()) * model_->sigma;
      if constexpr (P == 2) cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
      fallback = !positive_definite<P>(cov) || !mean.allFinite();
    }
    if (fallback) {
      mean = from + b * t_;
      cov = model_->sigma * t_;
    }
  }

 private:
  void prepare_euler(const Vec<P>& from, Conditional<P>& out) const {
    out.gauss = euler_;
    out.means[0] = from + model_->drift(from) * t_;
    out.log_weights[0] = 0.0;
    out.n = 1;
  }

  void prepare_so(const Vec<P>& from, Conditional<P>& out) const {
    Vec<P> mean;
    Mat<P> cov;
    bool fallback = false;
    so_moments(from, mean, cov, fallback);
    out.gauss = fallback ? euler_ : WrappedGaussian<P>(cov, model_->half_width);
    out.means[0] = mean;
    out.log_weights[0] = 0.0;
    out.n = 1;
  }

  void prepare_wou(const Vec<P>& from, Conditional<P>& out) const {
    out.gauss = wou_;
    out.n = 0;
    model_->stationary.for_each_weight(from - model_->mu, [&](const Vec<P>& x, double log_w) {
      const auto u = static_cast<std::size_t>(out.n);
      out.means[u] = model_->mu + decay_ * x;
      out.log_weights[u] = log_w;
      ++out.n;
    });
  }

  const WnModel<P>* model_;
  TpdKind kind_;
  double t_;
  WrappedGaussian<P> euler_;
  Mat<P> decay_ = Mat<P>::Identity();
  WrappedGaussian<P> wou_;
};

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_TRANSITION_HPP_
