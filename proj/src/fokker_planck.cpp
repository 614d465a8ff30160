#include "tordiff/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tordiff/detail/lattice.hpp"
#include "tordiff/detail/parallel.hpp"
#include "tordiff/detail/transition.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/errors.hpp"

namespace tordiff {

double cell_centre(int i, int m) noexcept { return -kPi + (i + 0.5) * kTwoPi / m; }

GridDensity GridDensity::zeros(int dim, int mx, int my) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (mx < 1 || my < 1) throw InvalidArgument("grid sizes must be positive");
  GridDensity g;
  g.dim = dim;
  g.mx = mx;
  g.my = dim == 1 ? 1 : my;
  g.values.assign(static_cast<std::size_t>(g.mx) * static_cast<std::size_t>(g.my), 0.0);
  return g;
}

GridDensity GridDensity::from_function(int dim, int mx, int my, const std::function<double(const TorusPoint&)>& f) {
  GridDensity g = zeros(dim, mx, my);
  for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = f(g.point(i));
  return g;
}

double GridDensity::cell_measure() const noexcept {
  const double h = kTwoPi / mx;
  return dim == 1 ? h : h * kTwoPi / my;
}

TorusPoint GridDensity::point(std::size_t index) const {
  const int i = static_cast<int>(index / static_cast<std::size_t>(my));
  if (dim == 1) return TorusPoint(cell_centre(i, mx));
  const int j = static_cast<int>(index % static_cast<std::size_t>(my));
  return TorusPoint(cell_centre(i, mx), cell_centre(j, my));
}

double GridDensity::mass() const noexcept {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_measure();
}

void GridDensity::normalize() {
  const double m = mass();
  if (!(m > 0.0) || !std::isfinite(m)) throw NumericError("grid density has no positive mass");
  for (double& v : values) v /= m;
}

namespace {

void check_same_shape(const GridDensity& a, const GridDensity& b) {
  if (a.dim != b.dim || a.mx != b.mx || a.my != b.my || a.size() != b.size())
    throw InvalidArgument("grid densities have different shapes");
}

}  // namespace

double l1_distance(const GridDensity& a, const GridDensity& b) {
  check_same_shape(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.cell_measure();
}

double kl_divergence(const GridDensity& p, const GridDensity& q) {
  check_same_shape(p, q);
  constexpr double kFloor = 1e-30;
  const double mp = p.mass(), mq = q.mass();
  if (!(mp > 0.0) || !(mq > 0.0)) throw NumericError("kl_divergence: grid without positive mass");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p.values[i] / mp;
    if (a <= 0.0) continue;
    s += a * std::log(std::max(a, kFloor) / std::max(q.values[i] / mq, kFloor));
  }
  return s * p.cell_measure();
}

void FpeConfig::validate() const {
  if (mx < 16 || my < 16) throw ConfigError("FPE grid sizes must be at least 16");
  if (mt_per_unit < 100) throw ConfigError("FPE needs at least 100 time steps per unit time");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("sigma0 must be positive");
  if (gh_nodes < 1 || gh_nodes > 64) throw ConfigError("gh_nodes must be between 1 and 64");
}

long FpeConfig::steps(double t) const {
  return std::max(1L, static_cast<long>(std::ceil(static_cast<double>(mt_per_unit) * t - 1e-9)));
}

GridDensity initial_density(const TorusPoint& theta_s, const FpeConfig& cfg) {
  cfg.validate();
  const int p = theta_s.dim();
  const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(p, p) * cfg.sigma0 * cfg.sigma0;
  const WindingTruncation trunc = WindingTruncation::for_spread(cfg.sigma0);
  GridDensity g = GridDensity::from_function(
      p, cfg.mx, cfg.my, [&](const TorusPoint& th) { return wn_density(th, theta_s, cov, trunc); });
  g.normalize();
  return g;
}

namespace {

// (I - c L) on one periodic line, factorised once, where
// (L p)_i = (b_{i-1} p_{i-1} - b_{i+1} p_{i+1}) / (2h) + D (p_{i+1} - 2 p_i + p_{i-1}) / h^2.
// Cyclic tridiagonal solve by Sherman-Morrison around a Thomas factorisation.
class LineSolver {
 public:
  LineSolver(std::span<const double> drift, double diff, double h, double c) : m_(drift.size()) {
    const double dh = diff / (h * h);
    const double ah = 1.0 / (2.0 * h);
    lo_.resize(m_);
    ex_lo_.resize(m_);
    ex_up_.resize(m_);
    ex_diag_ = -2.0 * c * dh;
    std::vector<double> sub(m_), sup(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t im = (i + m_ - 1) % m_, ip = (i + 1) % m_;
      const double l = drift[im] * ah + dh;
      const double u = -drift[ip] * ah + dh;
      ex_lo_[i] = c * l;
      ex_up_[i] = c * u;
      sub[i] = -c * l;
      sup[i] = -c * u;
    }
    const double diag = 1.0 + 2.0 * c * dh;
    const double gamma = -diag;
    // Modified tridiagonal T' and the rank-one correction u v'.
    std::vector<double> d(m_, diag);
    d[0] = diag - gamma;
    d[m_ - 1] = diag - sub[0] * sup[m_ - 1] / gamma;
    v_last_ = sub[0] / gamma;
    cp_.resize(m_);
    inv_den_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const double den = i == 0 ? d[0] : d[i] - sub[i] * cp_[i - 1];
      inv_den_[i] = 1.0 / den;
      cp_[i] = i + 1 < m_ ? sup[i] * inv_den_[i] : 0.0;
      lo_[i] = sub[i];
    }
    z_.assign(m_, 0.0);
    z_[0] = gamma;
    z_[m_ - 1] = sup[m_ - 1];
    thomas(z_.data(), 1);
    corr_ = 1.0 / (1.0 + z_[0] + v_last_ * z_[m_ - 1]);
  }

  /// x <- (I - cL)^{-1} x, elements at stride.
  void solve(double* x, std::size_t stride) const {
    thomas(x, stride);
    const double vy = x[0] + v_last_ * x[(m_ - 1) * stride];
    const double f = vy * corr_;
    for (std::size_t i = 0; i < m_; ++i) x[i * stride] -= f * z_[i];
  }

  /// out <- (I + cL) x.
  void apply_explicit(const double* x, std::size_t stride, double* out, std::size_t out_stride) const {
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t im = (i + m_ - 1) % m_, ip = (i + 1) % m_;
      out[i * out_stride] =
          x[i * stride] * (1.0 + ex_diag_) + ex_lo_[i] * x[im * stride] + ex_up_[i] * x[ip * stride];
    }
  }

 private:
  void thomas(double* x, std::size_t stride) const {
    x[0] *= inv_den_[0];
    for (std::size_t i = 1; i < m_; ++i) x[i * stride] = (x[i * stride] - lo_[i] * x[(i - 1) * stride]) * inv_den_[i];
    for (std::size_t i = m_ - 1; i-- > 0;) x[i * stride] -= cp_[i] * x[(i + 1) * stride];
  }

  std::size_t m_;
  std::vector<double> lo_, cp_, inv_den_, z_;
  std::vector<double> ex_lo_, ex_up_;
  double ex_diag_ = 0.0;
  double v_last_ = 0.0;
  double corr_ = 1.0;
};

struct DriftGrid {
  std::vector<double> bx;  // first component at every cell, row-major
  std::vector<double> by;  // second component (p = 2)
  double max_x = 0.0;
  double max_y = 0.0;
};

DriftGrid drift_grid(const WnParams& params, int mx, int my) {
  DriftGrid d;
  const int p = params.dim();
  const WindingTruncation trunc = default_truncation(params);
  detail::with_dim(p, [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const GridDensity g = GridDensity::zeros(p, mx, my);
    d.bx.resize(g.size());
    if constexpr (P == 2) d.by.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const detail::Vec<P> b = model.drift(detail::to_vec<P>(g.point(i)));
      d.bx[i] = b[0];
      d.max_x = std::max(d.max_x, std::abs(b[0]));
      if constexpr (P == 2) {
        d.by[i] = b[1];
        d.max_y = std::max(d.max_y, std::abs(b[1]));
      }
    }
  });
  return d;
}

// Time stepper for one segment length dt.
class Stepper {
 public:
  Stepper(const WnParams& params, const DriftGrid& drift, int mx, int my, double dt)
      : p_(params.dim()), mx_(static_cast<std::size_t>(mx)), my_(p_ == 1 ? 1 : static_cast<std::size_t>(my)) {
    const double hx = kTwoPi / mx;
    const double c = 0.5 * dt;
    const double dx = 0.5 * params.sigma1() * params.sigma1();
    std::vector<double> line(mx_);
    for (std::size_t j = 0; j < my_; ++j) {
      for (std::size_t i = 0; i < mx_; ++i) line[i] = drift.bx[i * my_ + j];
      x_lines_.emplace_back(line, dx, hx, c);
    }
    if (p_ == 2) {
      const double hy = kTwoPi / my;
      const double dy = 0.5 * params.sigma2() * params.sigma2();
      std::vector<double> col(my_);
      for (std::size_t i = 0; i < mx_; ++i) {
        for (std::size_t j = 0; j < my_; ++j) col[j] = drift.by[i * my_ + j];
        y_lines_.emplace_back(col, dy, hy, c);
      }
    }
    buf_.resize(mx_ * my_);
  }

  void step(std::vector<double>& v, Exec exec) {
    if (p_ == 1) {
      x_lines_[0].apply_explicit(v.data(), 1, buf_.data(), 1);
      x_lines_[0].solve(buf_.data(), 1);
      v.swap(buf_);
      return;
    }
    // (I - cLx) p* = (I + cLy) p
    detail::for_range(exec, mx_, [&](std::size_t i) {
      y_lines_[i].apply_explicit(v.data() + i * my_, 1, buf_.data() + i * my_, 1);
    });
    detail::for_range(exec, my_, [&](std::size_t j) { x_lines_[j].solve(buf_.data() + j, my_); });
    // (I - cLy) p = (I + cLx) p*
    detail::for_range(exec, my_, [&](std::size_t j) {
      x_lines_[j].apply_explicit(buf_.data() + j, my_, v.data() + j, my_);
    });
    detail::for_range(exec, mx_, [&](std::size_t i) { y_lines_[i].solve(v.data() + i * my_, 1); });
  }

 private:
  int p_;
  std::size_t mx_, my_;
  std::vector<LineSolver> x_lines_;
  std::vector<LineSolver> y_lines_;
  std::vector<double> buf_;
};

}  // namespace

FpeSolution solve_fpe(const WnParams& params, const GridDensity& initial, std::span<const double> times,
                      const FpeConfig& cfg, Exec exec) {
  cfg.validate();
  const int p = params.dim();
  if (initial.dim != p || initial.mx != cfg.mx || (p == 2 && initial.my != cfg.my))
    throw InvalidArgument("initial density does not match the FPE grid");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev) || !std::isfinite(t)) throw InvalidArgument("FPE output times must be positive and increasing");
    prev = t;
  }
  const DriftGrid drift = drift_grid(params, cfg.mx, cfg.my);
  const double hx = kTwoPi / cfg.mx, hy = kTwoPi / cfg.my;
  const double rate = std::max(drift.max_x / hx, p == 2 ? drift.max_y / hy : 0.0);

  FpeSolution sol;
  std::vector<double> v = initial.values;
  double now = 0.0;
  for (double t : times) {
    const long n = cfg.steps(t - now);
    const double dt = (t - now) / static_cast<double>(n);
    if (rate * dt > 1.0) {
      const long need = static_cast<long>(std::ceil(rate));
      throw ConfigError("FPE time step violates max|b| dt/dx <= 1; use at least " + std::to_string(need) +
                            " steps per unit time",
                        need);
    }
    Stepper stepper(params, drift, cfg.mx, cfg.my, dt);
    for (long s = 0; s < n; ++s) stepper.step(v, exec);
    now = t;

    GridDensity out = initial;
    out.values = v;
    sol.max_mass_error = std::max(sol.max_mass_error, std::abs(out.mass() - 1.0));
    double clipped = 0.0;
    for (double& x : out.values)
      if (x < 0.0) {
        clipped -= x;
        x = 0.0;
      }
    sol.clipped_mass.push_back(clipped * out.cell_measure());
    out.normalize();
    sol.slices.push_back(std::move(out));
  }
  return sol;
}

GridDensity solve_fpe(const WnParams& params, const TorusPoint& theta_s, double t, const FpeConfig& cfg, Exec exec) {
  if (theta_s.dim() != params.dim()) throw InvalidArgument("solve_fpe: dimension mismatch");
  const double times[] = {t};
  return std::move(solve_fpe(params, initial_density(theta_s, cfg), times, cfg, exec).slices.front());
}

namespace {

template <int P>
void accumulate_tpd(const detail::TransitionDensity<P>& td, const detail::Vec<P>& from, double weight,
                    GridDensity& out, Exec exec) {
  detail::Conditional<P> cond;
  td.prepare(from, cond);
  const std::size_t rows = static_cast<std::size_t>(out.mx);
  const std::size_t cols = static_cast<std::size_t>(out.my);
  detail::for_range(exec, rows, [&](std::size_t i) {
    detail::Vec<P> th;
    th[0] = cell_centre(static_cast<int>(i), out.mx);
    for (std::size_t j = 0; j < cols; ++j) {
      if constexpr (P == 2) th[1] = cell_centre(static_cast<int>(j), out.my);
      out.values[i * cols + j] += weight * std::exp(cond.log_density(th));
    }
  });
}

}  // namespace

GridDensity tpd_grid(TpdKind kind, const WnParams& params, const TorusPoint& from, double t, WindingTruncation trunc,
                     int mx, int my, Exec exec) {
  if (from.dim() != params.dim()) throw InvalidArgument("tpd_grid: dimension mismatch");
  GridDensity g = GridDensity::zeros(params.dim(), mx, my);
  detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const detail::TransitionDensity<P> td(kind, model, t);
    accumulate_tpd<P>(td, detail::to_vec<P>(from), 1.0, g, exec);
  });
  return g;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1 || n > 64) throw InvalidArgument("Gauss-Hermite order must lie in [1, 64]");
  // Golub-Welsch on the probabilists' Hermite recurrence.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()[i]);
    const double v = es.eigenvectors()(0, i);
    r.weights.push_back(v * v);
  }
  return r;
}

GridDensity smoothed_tpd(TpdKind kind, const WnParams& params, const TorusPoint& theta_s, double t, double sigma0,
                         const FpeConfig& cfg, WindingTruncation trunc, Exec exec) {
  if (theta_s.dim() != params.dim()) throw InvalidArgument("smoothed_tpd: dimension mismatch");
  if (!(sigma0 > 0.0)) throw InvalidArgument("smoothed_tpd: sigma0 must be positive");
  cfg.validate();
  const QuadratureRule gh = gauss_hermite(cfg.gh_nodes);
  GridDensity g = GridDensity::zeros(params.dim(), cfg.mx, cfg.my);
  detail::with_dim(params.dim(), [&](auto pc) {
    constexpr int P = decltype(pc)::value;
    const detail::WnModel<P> model(params, trunc);
    const detail::TransitionDensity<P> td(kind, model, t);
    const detail::Vec<P> centre = detail::to_vec<P>(theta_s);
    const std::size_t n = gh.nodes.size();
    if constexpr (P == 1) {
      for (std::size_t a = 0; a < n; ++a) {
        const detail::Vec<1> from = detail::wrap_vec<1>(centre + detail::Vec<1>(sigma0 * gh.nodes[a]));
        accumulate_tpd<1>(td, from, gh.weights[a], g, exec);
      }
    } else {
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          const detail::Vec<2> from =
              detail::wrap_vec<2>(centre + sigma0 * detail::Vec<2>(gh.nodes[a], gh.nodes[b]));
          accumulate_tpd<2>(td, from, gh.weights[a] * gh.weights[b], g, exec);
        }
    }
  });
  return g;
}

OuterRule stationary_outer_rule(const WnParams& params, int n, WindingTruncation trunc) {
  if (n < 1) throw InvalidArgument("outer rule needs at least one point per axis");
  const GridDensity g = GridDensity::from_function(params.dim(), n, n, [&](const TorusPoint& th) {
    return wn_density(th, params.mu(), stationary_cov(params), trunc);
  });
  OuterRule r;
  double total = 0.0;
  for (double v : g.values) total += v;
  for (std::size_t i = 0; i < g.size(); ++i) {
    r.points.push_back(g.point(i));
    r.weights.push_back(g.values[i] / total);
  }
  return r;
}

std::vector<KlPoint> kl_curves(const WnParams& params, std::span<const TpdKind> kinds, std::span<const double> times,
                               const FpeConfig& cfg, WindingTruncation trunc, Exec exec, int outer_n) {
  cfg.validate();
  if (kinds.empty() || times.empty()) throw InvalidArgument("kl_curves needs at least one kind and one time");
  if (outer_n <= 0) outer_n = params.dim() == 1 ? 20 : 12;
  const OuterRule outer = stationary_outer_rule(params, outer_n, trunc);
  const std::size_t nk = kinds.size(), nt = times.size();
  std::vector<double> per_point(outer.points.size() * nk * nt, 0.0);

  detail::for_range(exec, outer.points.size(), [&](std::size_t o) {
    const TorusPoint& from = outer.points[o];
    const FpeSolution pde = solve_fpe(params, initial_density(from, cfg), times, cfg, Exec::serial);
    for (std::size_t ti = 0; ti < nt; ++ti)
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const GridDensity approx =
            smoothed_tpd(kinds[ki], params, from, times[ti], cfg.sigma0, cfg, trunc, Exec::serial);
        per_point[(o * nt + ti) * nk + ki] = kl_divergence(pde.slices[ti], approx);
      }
  });

  std::vector<KlPoint> out;
  for (std::size_t ti = 0; ti < nt; ++ti)
    for (std::size_t ki = 0; ki < nk; ++ki) {
      double d = 0.0;
      for (std::size_t o = 0; o < outer.points.size(); ++o) d += outer.weights[o] * per_point[(o * nt + ti) * nk + ki];
      out.push_back({times[ti], kinds[ki], d});
    }
  return out;
}

double kl_divergence(TpdKind kind, const WnParams& params, double t, const FpeConfig& cfg, WindingTruncation trunc,
                     Exec exec, int outer_n) {
  const TpdKind kinds[] = {kind};
  const double times[] = {t};
  return kl_curves(params, kinds, times, cfg, trunc, exec, outer_n).front().divergence;
}

}  // namespace tordiff
