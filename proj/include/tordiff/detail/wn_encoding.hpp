#ifndef TORDIFF_DETAIL_WN_ENCODING_HPP_
#define TORDIFF_DETAIL_WN_ENCODING_HPP_

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tordiff/errors.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff::detail {

inline constexpr double kMaxLog = 25.0;
inline constexpr double kMaxEta = 15.0;

/// Unconstrained coordinates (log alpha1, log alpha2, eta, mu1, mu2 [, log sigma1, log sigma2])
/// with alpha3 = tanh(eta) sqrt(alpha1 alpha2); (log alpha, mu [, log sigma]) for p = 1.
struct WnEncoding {
  int dim;
  bool fixed_sigma;
  std::array<double, 2> sigma;

  int size() const { return (dim == 1 ? 2 : 5) + (fixed_sigma ? 0 : dim); }
  std::vector<int> periodic() const { return dim == 1 ? std::vector<int>{1} : std::vector<int>{3, 4}; }

  Eigen::VectorXd encode(const WnParams& p) const {
    Eigen::VectorXd x(size());
    if (dim == 1) {
      x << std::log(p.alpha1()), p.mu()[0];
      if (!fixed_sigma) x[2] = std::log(p.sigma1());
      return x;
    }
    const double r = p.alpha3() / std::sqrt(p.alpha1() * p.alpha2());
    x.head(5) << std::log(p.alpha1()), std::log(p.alpha2()), std::atanh(r), p.mu()[0], p.mu()[1];
    if (!fixed_sigma) x.tail(2) << std::log(p.sigma1()), std::log(p.sigma2());
    return x;
  }

  Eigen::VectorXd step() const {
    Eigen::VectorXd s = Eigen::VectorXd::Constant(size(), 0.5);
    if (!fixed_sigma) s.tail(dim).setConstant(0.2);
    return s;
  }

  std::optional<WnParams> decode(const Eigen::VectorXd& x) const {
    const int nlog = dim == 1 ? 1 : 2;
    for (int i = 0; i < nlog; ++i)
      if (!(std::abs(x[i]) <= kMaxLog)) return std::nullopt;
    if (!fixed_sigma)
      for (int i = size() - dim; i < size(); ++i)
        if (!(std::abs(x[i]) <= kMaxLog)) return std::nullopt;
    try {
      if (dim == 1) {
        const double s = fixed_sigma ? sigma[0] : std::exp(x[2]);
        return WnParams::circular(std::exp(x[0]), x[1], s);
      }
      if (!(std::abs(x[2]) <= kMaxEta)) return std::nullopt;
      const double a1 = std::exp(x[0]), a2 = std::exp(x[1]);
      const double s1 = fixed_sigma ? sigma[0] : std::exp(x[5]);
      const double s2 = fixed_sigma ? sigma[1] : std::exp(x[6]);
      return WnParams::toroidal(a1, a2, std::tanh(x[2]) * std::sqrt(a1 * a2), TorusPoint(x[3], x[4]), s1, s2);
    } catch (const ConstraintViolation&) {
      return std::nullopt;
    }
  }
};

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_WN_ENCODING_HPP_
