#include "tordiff/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tordiff/errors.hpp"
#include "tordiff/torus.hpp"

namespace tordiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Simplex {
 public:
  Simplex(const std::function<double(const Eigen::VectorXd&)>& f, int budget) : f_(f), budget_(budget) {}

  double eval(const Eigen::VectorXd& x) {
    ++evaluations_;
    const double v = f_(x);
    return std::isfinite(v) ? v : kInf;
  }
  bool exhausted() const noexcept { return evaluations_ >= budget_; }
  int evaluations() const noexcept { return evaluations_; }

 private:
  const std::function<double(const Eigen::VectorXd&)>& f_;
  int budget_;
  int evaluations_ = 0;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& step, const NelderMeadOptions& options) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw InvalidArgument("nelder_mead: empty starting point");
  if (step.size() != n) throw InvalidArgument("nelder_mead: step size mismatch");
  if (!(options.ftol > 0.0) || options.max_evaluations < n + 1)
    throw InvalidArgument("nelder_mead: ftol must be positive and the budget must cover the first simplex");
  for (int j : options.periodic)
    if (j < 0 || j >= n) throw InvalidArgument("nelder_mead: periodic coordinate out of range");

  Simplex s(f, options.max_evaluations);
  std::vector<Eigen::VectorXd> x(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fx(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i + 1)][i] += step[i];
  for (std::size_t i = 0; i < x.size(); ++i) fx[i] = s.eval(x[i]);

  std::vector<std::size_t> order(x.size());
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    for (std::size_t i : order) {
      xs.push_back(x[i]);
      fs.push_back(fx[i]);
    }
    x.swap(xs);
    fx.swap(fs);
  };
  auto recentre = [&] {
    for (int j : options.periodic) {
      const double shift = x[0][j] - wrap_angle(x[0][j]);
      if (shift == 0.0) continue;
      for (auto& v : x) v[j] -= shift;
    }
  };
  auto converged = [&] {
    const double lo = fx.front(), hi = fx.back();
    if (!std::isfinite(hi)) return false;
    return 2.0 * std::abs(hi - lo) <= options.ftol * (std::abs(hi) + std::abs(lo)) + 1e-300;
  };

  const auto N = static_cast<std::size_t>(n);
  bool done = false;
  sort_vertices();
  recentre();
  while (!(done = converged()) && !s.exhausted()) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < N; ++i) c += x[i];
    c /= static_cast<double>(n);

    const Eigen::VectorXd xr = c + (c - x[N]);
    const double fr = s.eval(xr);
    bool shrink = false;
    if (fr < fx[0]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - x[N]);
      const double fe = s.eval(xe);
      if (fe < fr) {
        x[N] = xe;
        fx[N] = fe;
      } else {
        x[N] = xr;
        fx[N] = fr;
      }
    } else if (fr < fx[N - 1]) {
      x[N] = xr;
      fx[N] = fr;
    } else if (fr < fx[N]) {
      const Eigen::VectorXd xc = c + 0.5 * (xr - c);
      const double fc = s.eval(xc);
      if (fc <= fr) {
        x[N] = xc;
        fx[N] = fc;
      } else {
        shrink = true;
      }
    } else {
      const Eigen::VectorXd xc = c + 0.5 * (x[N] - c);
      const double fc = s.eval(xc);
      if (fc < fx[N]) {
        x[N] = xc;
        fx[N] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= N && !s.exhausted(); ++i) {
        x[i] = x[0] + 0.5 * (x[i] - x[0]);
        fx[i] = s.eval(x[i]);
      }
    }
    sort_vertices();
    recentre();
  }

  NelderMeadResult r;
  r.x = x[0];
  r.value = fx[0];
  r.converged = done;
  r.evaluations = s.evaluations();
  return r;
}

}  // namespace tordiff
