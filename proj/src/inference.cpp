#include "tordiff/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/detail/parallel.hpp"
#include "tordiff/detail/transition.hpp"
#include "tordiff/detail/wn_encoding.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/errors.hpp"
#include "tordiff/optimize.hpp"

namespace tordiff {

namespace {

constexpr double kAlphaCap = 1e3;
constexpr double kAlphaFloor = 1e-8;
constexpr double kSigmaFloor = 1e-6;
constexpr double kMinResultant = 1e-6;
constexpr int kMaxRestarts = 10;

template <int P>
std::vector<detail::Vec<P>> to_vecs(const Trajectory& traj) {
  std::vector<detail::Vec<P>> out;
  out.reserve(traj.points.size());
  for (const auto& p : traj.points) out.push_back(detail::to_vec<P>(p));
  return out;
}

template <int P>
double loglik_impl(const std::vector<detail::Vec<P>>& pts, double delta, const WnParams& params, TpdKind kind,
                   bool stationary_start, WindingTruncation trunc, Exec exec) {
  const detail::WnModel<P> model(params, trunc);
  const detail::TransitionDensity<P> td(kind, model, delta);
  const std::size_t n = pts.size() - 1;
  std::vector<double> terms(n);
  detail::for_range(exec, n, [&](std::size_t i) {
    detail::Conditional<P> c;
    td.prepare(pts[i], c);
    const double v = c.log_density(pts[i + 1]);
    if (!std::isfinite(v))
      throw NumericError("non-finite log transition density at transition " + std::to_string(i), i);
    terms[i] = v;
  });
  double total = 0.0;
  if (stationary_start) {
    total = model.log_stationary(pts[0]);
    if (!std::isfinite(total)) throw NumericError("non-finite log stationary density at the first point");
  }
  for (double v : terms) total += v;
  return total;
}

template <int P>
FitResult fit_impl(const Trajectory& traj, const FitConfig& cfg, const WnParams& start_in) {
  WnParams start = start_in;
  if (cfg.fix_sigma) start = start.with_sigma((*cfg.fix_sigma)[0], (*cfg.fix_sigma)[1]);
  const WindingTruncation trunc = cfg.trunc.value_or(default_truncation(start));
  const auto pts = to_vecs<P>(traj);
  const detail::WnEncoding enc{P, cfg.fix_sigma.has_value(), cfg.fix_sigma.value_or(std::array<double, 2>{1.0, 1.0})};

  const auto objective = [&](const Eigen::VectorXd& x) -> double {
    const auto params = enc.decode(x);
    if (!params) return std::numeric_limits<double>::infinity();
    try {
      return -loglik_impl<P>(pts, traj.delta, *params, cfg.kind, cfg.include_stationary_start, trunc, Exec::serial);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions opt;
  opt.ftol = cfg.ftol;
  opt.max_evaluations = cfg.max_evaluations;
  opt.periodic = enc.periodic();
  // Restart from the optimum: SO's likelihood has kinks where its moments fall back to
  // Euler's, on which a single simplex run can stall.
  NelderMeadResult r = nelder_mead(objective, enc.encode(start), enc.step(), opt);
  int evaluations = r.evaluations;
  for (int k = 0; k < kMaxRestarts && std::isfinite(r.value); ++k) {
    opt.max_evaluations = cfg.max_evaluations - evaluations;
    if (opt.max_evaluations <= enc.size() + 1) break;
    const NelderMeadResult next = nelder_mead(objective, r.x, enc.step(), opt);
    evaluations += next.evaluations;
    const bool improved = r.value - next.value > cfg.ftol * std::abs(r.value);
    if (next.value <= r.value) r = next;
    if (!improved) break;
  }
  const auto best = enc.decode(r.x);
  if (!std::isfinite(r.value) || !best) throw FitFailed("every likelihood evaluation was non-finite");
  return FitResult{*best, -r.value, r.converged, evaluations};
}

}  // namespace

void FitConfig::validate() const {
  if (!(ftol > 0.0) || !std::isfinite(ftol)) throw ConfigError("ftol must be positive");
  if (max_evaluations < 10) throw ConfigError("max_evaluations must be at least 10");
  if (fix_sigma)
    for (double s : *fix_sigma)
      if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("fixed sigmas must be positive");
}

double loglik(const Trajectory& traj, const WnParams& params, const FitConfig& cfg, Exec exec) {
  traj.validate();
  if (traj.dim() != params.dim()) throw InvalidArgument("loglik: dimension mismatch");
  const WindingTruncation trunc = cfg.trunc.value_or(default_truncation(params));
  return detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    return loglik_impl<P>(to_vecs<P>(traj), traj.delta, params, cfg.kind, cfg.include_stationary_start, trunc, exec);
  });
}

WnParams stationary_init(const Trajectory& traj, const std::optional<std::array<double, 2>>& fix_sigma) {
  traj.validate();
  const std::size_t n = traj.transitions();
  if (n < 10) throw InvalidArgument("stationary_init needs at least 10 transitions");
  const int p = traj.dim();
  std::array<double, 2> mu{0.0, 0.0}, alpha{1.0, 1.0}, sigma{1.0, 1.0};
  for (int i = 0; i < p; ++i) {
    double c = 0.0, s = 0.0, qv = 0.0;
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
      c += std::cos(traj.points[k][i]);
      s += std::sin(traj.points[k][i]);
      if (k > 0) {
        const double d = wrap_angle(traj.points[k][i] - traj.points[k - 1][i]);
        qv += d * d;
      }
    }
    const double m = static_cast<double>(traj.points.size());
    const double rbar = std::hypot(c, s) / m;
    if (!(rbar >= kMinResultant))
      throw InitDegenerate("mean resultant length of coordinate " + std::to_string(i + 1) + " is numerically zero");
    const auto u = static_cast<std::size_t>(i);
    mu[u] = std::atan2(s, c);
    sigma[u] = fix_sigma ? (*fix_sigma)[u] : std::max(std::sqrt(qv / (static_cast<double>(n) * traj.delta)), kSigmaFloor);
    const double var = -2.0 * std::log(std::min(rbar, 1.0));
    const double a = var > 0.0 ? sigma[u] * sigma[u] / (2.0 * var) : kAlphaCap;
    alpha[u] = std::clamp(a, kAlphaFloor, kAlphaCap);
  }
  if (p == 1) return WnParams::circular(alpha[0], mu[0], sigma[0]);
  return WnParams::toroidal(alpha[0], alpha[1], 0.0, TorusPoint(mu[0], mu[1]), sigma[0], sigma[1]);
}

FitResult fit_mle(const Trajectory& traj, const FitConfig& cfg) {
  cfg.validate();
  traj.validate();
  return fit_mle(traj, cfg, stationary_init(traj, cfg.fix_sigma));
}

FitResult fit_mle(const Trajectory& traj, const FitConfig& cfg, const WnParams& start) {
  cfg.validate();
  traj.validate();
  if (traj.dim() != start.dim()) throw InvalidArgument("fit_mle: dimension mismatch");
  return detail::with_dim(start.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    return fit_impl<P>(traj, cfg, start);
  });
}

}  // namespace tordiff
