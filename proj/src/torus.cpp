#include "tordiff/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/errors.hpp"

namespace tordiff {

double wrap_angle(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot wrap a non-finite angle");
  return detail::wrap_unchecked(x);
}

TorusPoint::TorusPoint(double theta) : c_{wrap_angle(theta), 0.0}, dim_(1) {}

TorusPoint::TorusPoint(double theta1, double theta2) : c_{wrap_angle(theta1), wrap_angle(theta2)}, dim_(2) {}

Eigen::VectorXd TorusPoint::vector() const {
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = c_[static_cast<std::size_t>(i)];
  return v;
}

TorusPoint wrap(std::span<const double> x) {
  if (x.size() == 1) return TorusPoint(x[0]);
  if (x.size() == 2) return TorusPoint(x[0], x[1]);
  throw InvalidArgument("torus dimension must be 1 or 2, got " + std::to_string(x.size()));
}

TorusPoint wrap(const Eigen::VectorXd& x) { return wrap(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))); }

double angular_distance(const TorusPoint& a, const TorusPoint& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("angular_distance: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double d = detail::wrap_unchecked(a[i] - b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

WindingTruncation::WindingTruncation(int half_width) : k_(half_width) {
  if (half_width < 1 || half_width > detail::kMaxHalfWidth)
    throw InvalidArgument("winding half-width must lie in [1, " + std::to_string(detail::kMaxHalfWidth) + "]");
}

WindingTruncation WindingTruncation::for_spread(double max_sd) {
  if (max_sd <= 2.0) return WindingTruncation(2);
  // Beyond K = 4, keep the nearest dropped term at least 8 sd away.
  const int k = static_cast<int>(std::ceil((8.0 * max_sd / kPi - 1.0) / 2.0));
  return WindingTruncation(std::clamp(k, 4, detail::kMaxHalfWidth));
}

std::vector<WindingIndex> winding_lattice(int dim, WindingTruncation trunc) {
  std::vector<WindingIndex> out;
  const int k = trunc.half_width();
  if (dim == 1) {
    for (int k1 = -k; k1 <= k; ++k1) out.push_back({k1, 0});
  } else if (dim == 2) {
    for (int k1 = -k; k1 <= k; ++k1)
      for (int k2 = -k; k2 <= k; ++k2) out.push_back({k1, k2});
  } else {
    throw InvalidArgument("torus dimension must be 1 or 2");
  }
  return out;
}

namespace {

void check_same_dim(const TorusPoint& a, const TorusPoint& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("dimension mismatch between theta and mu");
}

}  // namespace

double wn_log_density(const TorusPoint& theta, const TorusPoint& mu, const Eigen::MatrixXd& cov,
                      WindingTruncation trunc) {
  check_same_dim(theta, mu);
  return detail::with_dim(theta.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WrappedGaussian<P> g(detail::to_mat<P>(cov), trunc.half_width());
    return g.log_density(detail::to_vec<P>(theta) - detail::to_vec<P>(mu));
  });
}

double wn_density(const TorusPoint& theta, const TorusPoint& mu, const Eigen::MatrixXd& cov,
                  WindingTruncation trunc) {
  return std::exp(wn_log_density(theta, mu, cov, trunc));
}

Eigen::VectorXd wn_log_density_gradient(const TorusPoint& theta, const TorusPoint& mu,
                                        const Eigen::MatrixXd& cov, WindingTruncation trunc) {
  check_same_dim(theta, mu);
  return detail::with_dim(theta.dim(), [&](auto pc) -> Eigen::VectorXd {
    constexpr int P = decltype(pc)::value;
    const detail::WrappedGaussian<P> g(detail::to_mat<P>(cov), trunc.half_width());
    const auto m = g.moments(detail::to_vec<P>(theta) - detail::to_vec<P>(mu), false);
    return -g.precision() * m.mean;
  });
}

std::vector<double> winding_weights(const TorusPoint& theta, const TorusPoint& mu, const Eigen::MatrixXd& cov,
                                    WindingTruncation trunc) {
  check_same_dim(theta, mu);
  std::vector<double> w(static_cast<std::size_t>(trunc.lattice_size(theta.dim())));
  detail::with_dim(theta.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WrappedGaussian<P> g(detail::to_mat<P>(cov), trunc.half_width());
    g.weights(detail::to_vec<P>(theta) - detail::to_vec<P>(mu), w);
  });
  return w;
}

}  // namespace tordiff
