#ifndef TORDIFF_TORUS_HPP_
#define TORDIFF_TORUS_HPP_

#include <array>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tordiff {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Principal angle ((x + pi) mod 2pi) - pi, in [-pi, pi). Throws InvalidArgument on non-finite x.
double wrap_angle(double x);

/// A point on T^1 or T^2 with every coordinate in [-pi, pi).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(double theta);
  TorusPoint(double theta1, double theta2);

  int dim() const noexcept { return dim_; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }
  Eigen::VectorXd vector() const;

  bool operator==(const TorusPoint&) const = default;

 private:
  std::array<double, 2> c_{0.0, 0.0};
  int dim_ = 1;
};

/// Componentwise wrap of a 1- or 2-vector.
TorusPoint wrap(std::span<const double> x);
TorusPoint wrap(const Eigen::VectorXd& x);

/// Euclidean norm of the componentwise wrapped difference a - b.
double angular_distance(const TorusPoint& a, const TorusPoint& b);

/// Half-width K of the winding lattice {-K..K}^p that replaces Z^p in every series.
class WindingTruncation {
 public:
  explicit WindingTruncation(int half_width = 2);

  /// K = 2 when every marginal standard deviation is <= 2, otherwise K >= 4 chosen so the
  /// nearest dropped winding lies 8 sd out (capped at 10).
  static WindingTruncation for_spread(double max_sd);

  int half_width() const noexcept { return k_; }
  int lattice_size(int dim) const noexcept { return dim == 1 ? 2 * k_ + 1 : (2 * k_ + 1) * (2 * k_ + 1); }

  bool operator==(const WindingTruncation&) const = default;

 private:
  int k_;
};

/// Winding index k in {-K..K}^p; unused trailing entry is 0 for p = 1.
using WindingIndex = std::array<int, 2>;

/// Lattice labels in the order used by winding_weights (first coordinate slowest).
std::vector<WindingIndex> winding_lattice(int dim, WindingTruncation trunc);

/// Wrapped normal density: truncated lattice sum of N(0, cov) densities at theta - mu + 2k*pi.
/// When a marginal sd exceeds (2K+1)pi/8 the lattice cannot hold the mass and the
/// equivalent Fourier series is summed instead.
double wn_density(const TorusPoint& theta, const TorusPoint& mu, const Eigen::MatrixXd& cov,
                  WindingTruncation trunc);
double wn_log_density(const TorusPoint& theta, const TorusPoint& mu, const Eigen::MatrixXd& cov,
                      WindingTruncation trunc);

/// Gradient of log f_WN(.; mu, cov) at theta.
Eigen::VectorXd wn_log_density_gradient(const TorusPoint& theta, const TorusPoint& mu,
                                        const Eigen::MatrixXd& cov, WindingTruncation trunc);

/// Posterior probabilities of the winding numbers, indexed like winding_lattice().
std::vector<double> winding_weights(const TorusPoint& theta, const TorusPoint& mu,
                                    const Eigen::MatrixXd& cov, WindingTruncation trunc);

}  // namespace tordiff

#endif  // TORDIFF_TORUS_HPP_
