#ifndef TORDIFF_DETAIL_LATTICE_HPP_
#define TORDIFF_DETAIL_LATTICE_HPP_

// Fixed-dimension kernels behind the runtime-dimension public API. P is 1 or 2.

#include <algorithm>
#include <array>
#include <cmath>
#include <type_traits>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "tordiff/errors.hpp"
#include "tordiff/torus.hpp"

namespace tordiff::detail {

template <int P>
using Vec = Eigen::Matrix<double, P, 1>;
template <int P>
using Mat = Eigen::Matrix<double, P, P>;

inline constexpr int kMaxHalfWidth = 10;
inline constexpr int kMaxLattice = (2 * kMaxHalfWidth + 1) * (2 * kMaxHalfWidth + 1);
// Terms with exp(-q/2) below exp(-40) relative to the leading term are dropped.
inline constexpr double kQuadCut = 80.0;

inline double wrap_unchecked(double x) noexcept {
  if (x >= -kPi && x < kPi) return x;
  // One period away the shift is exact (Sterbenz), so x +- 2pi wraps back to x bit-for-bit.
  if (x >= kPi && x < 3.0 * kPi) {
    const double r = x - kTwoPi;
    if (r >= -kPi && r < kPi) return r;
  } else if (x < -kPi && x >= -3.0 * kPi) {
    const double r = x + kTwoPi;
    if (r >= -kPi && r < kPi) return r;
  }
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  if (r >= kPi) r -= kTwoPi;
  return r;
}

template <int P>
Vec<P> wrap_vec(const Vec<P>& x) noexcept {
  Vec<P> out;
  for (int i = 0; i < P; ++i) out[i] = wrap_unchecked(x[i]);
  return out;
}

template <int P>
Vec<P> to_vec(const TorusPoint& p) {
  if (p.dim() != P) throw InvalidArgument("torus point has dimension " + std::to_string(p.dim()) +
                                          ", expected " + std::to_string(P));
  Vec<P> v;
  for (int i = 0; i < P; ++i) v[i] = p[i];
  return v;
}

template <int P>
TorusPoint to_point(const Vec<P>& v) {
  if constexpr (P == 1) {
    return TorusPoint(v[0]);
  } else {
    return TorusPoint(v[0], v[1]);
  }
}

template <int P>
Mat<P> to_mat(const Eigen::MatrixXd& m) {
  if (m.rows() != P || m.cols() != P) throw InvalidArgument("matrix has wrong shape for torus dimension");
  return m;
}

/// Calls f(shift, index) for every 2*pi*k, k in {-K..K}^P, first coordinate slowest.
template <int P, class F>
void for_each_shift(int half_width, F&& f) {
  int idx = 0;
  if constexpr (P == 1) {
    for (int k = -half_width; k <= half_width; ++k) f(Vec<1>(kTwoPi * k), idx++);
  } else {
    for (int k1 = -half_width; k1 <= half_width; ++k1)
      for (int k2 = -half_width; k2 <= half_width; ++k2) f(Vec<2>(kTwoPi * k1, kTwoPi * k2), idx++);
  }
}

template <int P>
struct LatticeMoments {
  Vec<P> mean;
  Mat<P> cov;
};

/// N(0, cov) summed over the truncated winding lattice. Arguments are differences
/// theta - mu in any representative; they are wrapped before the sum so truncation
/// is centred.
template <int P>
class WrappedGaussian {
 public:
  WrappedGaussian() = default;

  WrappedGaussian(const Mat<P>& cov, int half_width) : k_(half_width) {
    if (half_width < 1 || half_width > kMaxHalfWidth) throw InvalidArgument("winding half-width out of range");
    cov_ = cov;
    if constexpr (P == 1) {
      if (!(cov(0, 0) > 0.0) || !std::isfinite(cov(0, 0))) throw InvalidArgument("variance must be positive");
      prec_(0, 0) = 1.0 / cov(0, 0);
      log_norm_ = -0.5 * std::log(kTwoPi * cov(0, 0));
    } else {
      const double scale = std::abs(cov(0, 0)) + std::abs(cov(1, 1));
      if (!cov.allFinite() || std::abs(cov(0, 1) - cov(1, 0)) > 1e-10 * scale)
        throw InvalidArgument("covariance must be finite and symmetric");
      cov_(0, 1) = cov_(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
      const double det = cov_(0, 0) * cov_(1, 1) - cov_(0, 1) * cov_(0, 1);
      if (!(cov_(0, 0) > 0.0) || !(det > 0.0)) throw InvalidArgument("covariance must be positive definite");
      prec_ << cov_(1, 1) / det, -cov_(0, 1) / det, -cov_(0, 1) / det, cov_(0, 0) / det;
      log_norm_ = -std::log(kTwoPi) - 0.5 * std::log(det);
    }
    choose_series();
  }

  int half_width() const noexcept { return k_; }
  const Mat<P>& covariance() const noexcept { return cov_; }
  const Mat<P>& precision() const noexcept { return prec_; }

  double log_density(const Vec<P>& diff) const {
    const Vec<P> d = wrap_vec<P>(diff);
    if (dual_ > 0) {
      const double f = dual_density(d);
      if (f > 0.0) return std::log(f);
    }
    double qmin = std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for_each_shift<P>(k_, [&](const Vec<P>& s, int) {
      const Vec<P> x = d + s;
      const double q = x.dot(prec_ * x);
      if (q < qmin) {
        acc = (qmin - q < kQuadCut ? acc * std::exp(-0.5 * (qmin - q)) : 0.0) + 1.0;
        qmin = q;
      } else if (q - qmin < kQuadCut) {
        acc += std::exp(-0.5 * (q - qmin));
      }
    });
    return log_norm_ - 0.5 * qmin + std::log(acc);
  }

  double density(const Vec<P>& diff) const { return std::exp(log_density(diff)); }

  /// Calls f(x_k, log w_k) for x_k = wrap(diff) + 2*pi*k over the non-negligible winding
  /// numbers, with w_k the normalised winding weights.
  template <class F>
  void for_each_weight(const Vec<P>& diff, F&& f) const {
    const Vec<P> d = wrap_vec<P>(diff);
    std::array<double, kMaxLattice> q;
    double qmin = std::numeric_limits<double>::infinity();
    for_each_shift<P>(k_, [&](const Vec<P>& s, int i) {
      const Vec<P> x = d + s;
      q[static_cast<std::size_t>(i)] = x.dot(prec_ * x);
      qmin = std::min(qmin, q[static_cast<std::size_t>(i)]);
    });
    double acc = 0.0;
    for_each_shift<P>(k_, [&](const Vec<P>&, int i) {
      const double dq = q[static_cast<std::size_t>(i)] - qmin;
      if (dq < kQuadCut) acc += std::exp(-0.5 * dq);
    });
    const double log_acc = std::log(acc);
    for_each_shift<P>(k_, [&](const Vec<P>& s, int i) {
      const double dq = q[static_cast<std::size_t>(i)] - qmin;
      if (dq < kQuadCut) f(Vec<P>(d + s), -0.5 * dq - log_acc);
    });
  }

  /// All winding weights (zero for dropped terms), lattice order.
  void weights(const Vec<P>& diff, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const Vec<P> d = wrap_vec<P>(diff);
    std::array<double, kMaxLattice> q;
    double qmin = std::numeric_limits<double>::infinity();
    for_each_shift<P>(k_, [&](const Vec<P>& s, int i) {
      const Vec<P> x = d + s;
      q[static_cast<std::size_t>(i)] = x.dot(prec_ * x);
      qmin = std::min(qmin, q[static_cast<std::size_t>(i)]);
    });
    double acc = 0.0;
    for_each_shift<P>(k_, [&](const Vec<P>&, int i) {
      const double dq = q[static_cast<std::size_t>(i)] - qmin;
      if (dq < kQuadCut) {
        out[static_cast<std::size_t>(i)] = std::exp(-0.5 * dq);
        acc += out[static_cast<std::size_t>(i)];
      }
    });
    for (double& w : out) w /= acc;
  }

  /// Weighted mean and covariance of x_k = wrap(diff) + 2*pi*k under the winding weights.
  LatticeMoments<P> moments(const Vec<P>& diff, bool with_cov) const {
    LatticeMoments<P> m;
    m.mean.setZero();
    m.cov.setZero();
    std::array<Vec<P>, kMaxLattice> xs;
    std::array<double, kMaxLattice> ws;
    int n = 0;
    for_each_weight(diff, [&](const Vec<P>& x, double log_w) {
      xs[static_cast<std::size_t>(n)] = x;
      ws[static_cast<std::size_t>(n)] = std::exp(log_w);
      m.mean += ws[static_cast<std::size_t>(n)] * x;
      ++n;
    });
    if (with_cov) {
      for (int i = 0; i < n; ++i) {
        const Vec<P> c = xs[static_cast<std::size_t>(i)] - m.mean;
        m.cov += ws[static_cast<std::size_t>(i)] * (c * c.transpose());
      }
    }
    return m;
  }

 private:
  // The lattice sum loses mass once a marginal sd exceeds (2K+1)pi/8. In that regime the
  // Fourier series (2pi)^-p sum_n exp(-n'Sn/2) cos(n'd) converges in a few terms.
  void choose_series() {
    double sd_max = 0.0;
    for (int i = 0; i < P; ++i) sd_max = std::max(sd_max, std::sqrt(cov_(i, i)));
    dual_ = 0;
    if ((2 * k_ + 1) * kPi >= 8.0 * sd_max) return;
    double lmin = cov_(0, 0);
    if constexpr (P == 2) {
      const double s = 0.5 * (cov_(0, 0) + cov_(1, 1));
      const double r = std::hypot(0.5 * (cov_(0, 0) - cov_(1, 1)), cov_(0, 1));
      lmin = s - r;
    }
    if (!(lmin > 0.0)) return;
    const double n = std::ceil(std::sqrt(kQuadCut / lmin));
    if (n <= kMaxDual) dual_ = static_cast<int>(n);
  }

  double dual_density(const Vec<P>& d) const {
    double acc = 0.0;
    if constexpr (P == 1) {
      for (int n = 1; n <= dual_; ++n) acc += 2.0 * std::exp(-0.5 * n * n * cov_(0, 0)) * std::cos(n * d[0]);
      return (1.0 + acc) / kTwoPi;
    } else {
      for (int n1 = -dual_; n1 <= dual_; ++n1)
        for (int n2 = -dual_; n2 <= dual_; ++n2) {
          const double q = n1 * n1 * cov_(0, 0) + 2.0 * n1 * n2 * cov_(0, 1) + n2 * n2 * cov_(1, 1);
          if (q < kQuadCut) acc += std::exp(-0.5 * q) * std::cos(n1 * d[0] + n2 * d[1]);
        }
      return acc / (kTwoPi * kTwoPi);
    }
  }

  static constexpr int kMaxDual = 40;

  Mat<P> cov_ = Mat<P>::Identity();
  Mat<P> prec_ = Mat<P>::Identity();
  double log_norm_ = 0.0;
  int k_ = 2;
  int dual_ = 0;
};

template <class F>
decltype(auto) with_dim(int dim, F&& f) {
  if (dim == 1) return f(std::integral_constant<int, 1>{});
  if (dim == 2) return f(std::integral_constant<int, 2>{});
  throw InvalidArgument("torus dimension must be 1 or 2");
}

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_LATTICE_HPP_
