#include "tordiff/tpd.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/detail/transition.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/errors.hpp"

namespace tordiff {

std::string_view to_string(TpdKind kind) {
  switch (kind) {
    case TpdKind::euler:
      return "E";
    case TpdKind::shoji_ozaki:
      return "SO";
    case TpdKind::wou:
      return "WOU";
  }
  return "?";
}

TpdKind parse_tpd_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "e" || s == "euler") return TpdKind::euler;
  if (s == "so" || s == "shoji-ozaki" || s == "shoji_ozaki") return TpdKind::shoji_ozaki;
  if (s == "wou") return TpdKind::wou;
  throw InvalidArgument("unknown tpd kind '" + std::string(name) + "'");
}

void Trajectory::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("trajectory spacing must be positive");
  if (points.size() < 2) throw InvalidArgument("trajectory needs at least one transition");
  const int p = points.front().dim();
  for (const auto& pt : points)
    if (pt.dim() != p) throw InvalidArgument("trajectory points have mixed dimensions");
}

Trajectory subsample(const Trajectory& traj, std::size_t stride, std::size_t transitions) {
  if (stride == 0) throw InvalidArgument("subsample stride must be positive");
  if (transitions * stride >= traj.points.size()) throw InvalidArgument("trajectory too short for subsampling");
  Trajectory out;
  out.delta = traj.delta * static_cast<double>(stride);
  out.points.reserve(transitions + 1);
  for (std::size_t i = 0; i <= transitions; ++i) out.points.push_back(traj.points[i * stride]);
  return out;
}

double log_tpd(TpdKind kind, const TorusPoint& theta, const TorusPoint& from, const WnParams& params, double t,
               WindingTruncation trunc) {
  if (theta.dim() != params.dim() || from.dim() != params.dim()) throw InvalidArgument("tpd: dimension mismatch");
  return detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const detail::TransitionDensity<P> td(kind, model, t);
    return td.log_density(detail::to_vec<P>(theta), detail::to_vec<P>(from));
  });
}

double tpd(TpdKind kind, const TorusPoint& theta, const TorusPoint& from, const WnParams& params, double t,
           WindingTruncation trunc) {
  return std::exp(log_tpd(kind, theta, from, params, t, trunc));
}

double euler_tpd(const TorusPoint& theta, const TorusPoint& phi, const WnParams& params, double delta,
                 WindingTruncation trunc) {
  return tpd(TpdKind::euler, theta, phi, params, delta, trunc);
}

double shoji_ozaki_tpd(const TorusPoint& theta, const TorusPoint& phi, const WnParams& params, double delta,
                       WindingTruncation trunc) {
  return tpd(TpdKind::shoji_ozaki, theta, phi, params, delta, trunc);
}

double wou_tpd(const TorusPoint& theta, const TorusPoint& theta_s, const WnParams& params, double t,
               WindingTruncation trunc) {
  return tpd(TpdKind::wou, theta, theta_s, params, t, trunc);
}

LinearisedMoments linearised_moments(const Eigen::VectorXd& phi, const Eigen::VectorXd& drift,
                                     const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& diffusion,
                                     double delta) {
  const auto p = phi.size();
  if (drift.size() != p || jacobian.rows() != p || jacobian.cols() != p || diffusion.rows() != p ||
      diffusion.cols() != p)
    throw InvalidArgument("linearised_moments: shape mismatch");
  return detail::with_dim(static_cast<int>(p), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::Mat<P> j = jacobian;
    const detail::Mat<P> jinv = j.inverse();
    LinearisedMoments m;
    const detail::Vec<P> mean =
        detail::Vec<P>(phi) + jinv * (detail::expm<P>(j, delta) - detail::Mat<P>::Identity()) * detail::Vec<P>(drift);
    detail::Mat<P> cov =
        0.5 * jinv * (detail::expm<P>(j, 2.0 * delta) - detail::Mat<P>::Identity()) * detail::Mat<P>(diffusion);
    m.mean = mean;
    m.cov = 0.5 * (cov + cov.transpose());
    return m;
  });
}

LinearisedMoments shoji_ozaki_moments(const TorusPoint& phi, const WnParams& params, double delta,
                                      WindingTruncation trunc) {
  if (phi.dim() != params.dim()) throw InvalidArgument("shoji_ozaki_moments: dimension mismatch");
  return detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const detail::TransitionDensity<P> td(TpdKind::shoji_ozaki, model, delta);
    detail::Vec<P> mean;
    detail::Mat<P> cov;
    bool fallback = false;
    td.so_moments(detail::to_vec<P>(phi), mean, cov, fallback);
    LinearisedMoments m;
    m.mean = mean;
    m.cov = cov;
    m.fallback = fallback;
    return m;
  });
}

namespace {

template <int P>
detail::Vec<P> normal_vec(Rng& rng) {
  detail::Vec<P> z;
  for (int i = 0; i < P; ++i) z[i] = rng.normal();
  return z;
}

template <int P>
detail::Mat<P> cholesky(const detail::Mat<P>& cov) {
  const Eigen::LLT<detail::Mat<P>> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

Trajectory simulate_euler(const WnParams& params, const TorusPoint& theta0, double delta, std::size_t n,
                          std::size_t refine_m, Rng& rng, WindingTruncation trunc) {
  if (!(delta > 0.0)) throw InvalidArgument("simulate_euler: delta must be positive");
  if (refine_m < 1) throw InvalidArgument("simulate_euler: refine_m must be >= 1");
  if (theta0.dim() != params.dim()) throw InvalidArgument("simulate_euler: dimension mismatch");
  Trajectory traj;
  traj.delta = delta;
  traj.points.reserve(n + 1);
  traj.points.push_back(theta0);
  detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const double h = delta / static_cast<double>(refine_m);
    const double sqrt_h = std::sqrt(h);
    detail::Vec<P> theta = detail::to_vec<P>(theta0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < refine_m; ++j) {
        const detail::Vec<P> z = normal_vec<P>(rng);
        theta = detail::wrap_vec<P>(theta + model.drift(theta) * h + sqrt_h * model.sigma_sd.cwiseProduct(z));
      }
      traj.points.push_back(detail::to_point<P>(theta));
    }
  });
  return traj;
}

Trajectory simulate_euler(const WnParams& params, const TorusPoint& theta0, double delta, std::size_t n,
                          std::size_t refine_m, std::uint64_t seed, WindingTruncation trunc) {
  Rng rng(seed);
  return simulate_euler(params, theta0, delta, n, refine_m, rng, trunc);
}

TorusPoint sample_wou(const TorusPoint& theta_s, const WnParams& params, double t, WindingTruncation trunc, Rng& rng) {
  if (theta_s.dim() != params.dim()) throw InvalidArgument("sample_wou: dimension mismatch");
  if (!(t > 0.0)) throw InvalidArgument("sample_wou: t must be positive");
  return detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    std::array<detail::Vec<P>, detail::kMaxLattice> xs;
    std::array<double, detail::kMaxLattice> ws;
    std::size_t n = 0;
    model.stationary.for_each_weight(detail::to_vec<P>(theta_s) - model.mu, [&](const detail::Vec<P>& x, double lw) {
      xs[n] = x;
      ws[n] = std::exp(lw);
      ++n;
    });
    const std::size_t m = rng.categorical(std::span<const double>(ws.data(), n));
    const detail::Vec<P> mean = model.mu + detail::expm<P>(model.a, -t) * xs[m];
    const detail::Mat<P> l = cholesky<P>(detail::gamma<P>(model.a, model.sigma, t));
    return detail::to_point<P>(detail::wrap_vec<P>(mean + l * normal_vec<P>(rng)));
  });
}

TorusPoint sample_wou(const TorusPoint& theta_s, const WnParams& params, double t, WindingTruncation trunc,
                      std::uint64_t seed) {
  Rng rng(seed);
  return sample_wou(theta_s, params, t, trunc, rng);
}

TorusPoint sample_stationary(const WnParams& params, Rng& rng) {
  return detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::Mat<P> l = cholesky<P>(detail::to_mat<P>(stationary_cov(params)));
    return detail::to_point<P>(detail::wrap_vec<P>(detail::to_vec<P>(params.mu()) + l * normal_vec<P>(rng)));
  });
}

}  // namespace tordiff
