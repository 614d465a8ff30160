#ifndef TORDIFF_OPTIMIZE_HPP_
#define TORDIFF_OPTIMIZE_HPP_

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tordiff {

struct NelderMeadOptions {
  double ftol = 1e-8;          // stop when 2|f_worst - f_best| <= ftol (|f_worst| + |f_best|)
  int max_evaluations = 10000;
  std::vector<int> periodic;   // coordinates with period 2pi, kept in [-pi, pi)
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int evaluations = 0;
};

/// Minimises f by the Nelder-Mead simplex method (reflection 1, expansion 2, contraction
/// 1/2, shrink 1/2) from the simplex x0, x0 + step_i e_i. Non-finite values count as +inf.
/// Periodic coordinates are assumed to leave f unchanged under shifts by 2pi; whenever the
/// best vertex leaves [-pi, pi) the whole simplex is translated back along that coordinate.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const NelderMeadOptions& options = {});

}  // namespace tordiff

#endif  // TORDIFF_OPTIMIZE_HPP_
