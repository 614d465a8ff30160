#ifndef TORDIFF_FOKKER_PLANCK_HPP_
#define TORDIFF_FOKKER_PLANCK_HPP_

#include <functional>
#include <span>
#include <vector>

#include "tordiff/exec.hpp"
#include "tordiff/tpd.hpp"
#include "tordiff/torus.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

/// Density values at the cell centres -pi + (i + 1/2) 2pi/M of a uniform periodic grid.
/// Row-major with the first coordinate slowest; my == 1 for p = 1.
struct GridDensity {
  int dim = 1;
  int mx = 0;
  int my = 1;
  std::vector<double> values;

  static GridDensity zeros(int dim, int mx, int my = 1);
  /// Tabulates f at the cell centres.
  static GridDensity from_function(int dim, int mx, int my, const std::function<double(const TorusPoint&)>& f);

  std::size_t size() const noexcept { return values.size(); }
  double cell_measure() const noexcept;
  TorusPoint point(std::size_t index) const;
  /// Riemann sum times cell measure.
  double mass() const noexcept;
  /// Scales to unit mass. Throws NumericError if the mass is not positive.
  void normalize();

  bool operator==(const GridDensity&) const = default;
};

double cell_centre(int i, int m) noexcept;

/// Sum of |a - b| times the cell measure. Throws InvalidArgument on shape mismatch.
double l1_distance(const GridDensity& a, const GridDensity& b);

/// Discrete KL divergence sum p log(p / q) times cell measure after normalising both
/// grids, with both floored at 1e-30 before the log.
double kl_divergence(const GridDensity& p, const GridDensity& q);

struct FpeConfig {
  int mx = 240;
  int my = 240;
  int mt_per_unit = 1500;
  double sigma0 = 0.1;
  int gh_nodes = 5;  // Gauss-Hermite nodes per coordinate for smoothed tpds

  /// Throws ConfigError unless mx, my >= 16, mt_per_unit >= 100, sigma0 > 0 and
  /// 1 <= gh_nodes <= 64.
  void validate() const;
  /// Number of steps ceil(mt_per_unit * t) for a time span t.
  long steps(double t) const;
};

/// Stored slices of one PDE run.
struct FpeSolution {
  std::vector<GridDensity> slices;  // clipped and renormalised
  std::vector<double> clipped_mass;  // negative mass removed from each slice
  double max_mass_error = 0.0;       // largest |mass - 1| before renormalisation
};

/// WN(theta_s, sigma0^2 I) tabulated on the configured grid and normalised.
GridDensity initial_density(const TorusPoint& theta_s, const FpeConfig& cfg);

/// Solves the Fokker-Planck equation of the WN process from `initial` and stores the
/// density at each of the increasing times. Crank-Nicolson for p = 1, Peaceman-Rachford
/// ADI for p = 2, conservative central differences. Throws ConfigError (with the smallest
/// passing mt_per_unit) when max|b| dt / dx > 1.
FpeSolution solve_fpe(const WnParams& params, const GridDensity& initial, std::span<const double> times,
                      const FpeConfig& cfg, Exec exec = Exec::parallel);

/// Density at time t started from initial_density(theta_s, cfg).
GridDensity solve_fpe(const WnParams& params, const TorusPoint& theta_s, double t, const FpeConfig& cfg,
                      Exec exec = Exec::parallel);

/// p^A_t(. | from) on an mx x my grid.
GridDensity tpd_grid(TpdKind kind, const WnParams& params, const TorusPoint& from, double t, WindingTruncation trunc,
                     int mx, int my, Exec exec = Exec::parallel);

/// Approximate tpd smoothed over a WN(theta_s, sigma0^2 I) start, integrating over the
/// start point with a cfg.gh_nodes-point Gauss-Hermite rule per coordinate. The rule
/// converges slowly for starts near the antipode of mu, where the WN drift turns sharply.
GridDensity smoothed_tpd(TpdKind kind, const WnParams& params, const TorusPoint& theta_s, double t, double sigma0,
                         const FpeConfig& cfg, WindingTruncation trunc, Exec exec = Exec::parallel);

/// Nodes and weights of the n-point Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_hermite(int n);

/// Outer quadrature over theta_s: cell centres of an n (p = 1) or n x n (p = 2) grid with
/// weights proportional to the stationary density.
struct OuterRule {
  std::vector<TorusPoint> points;
  std::vector<double> weights;
};
OuterRule stationary_outer_rule(const WnParams& params, int n, WindingTruncation trunc);

struct KlPoint {
  double t;
  TpdKind kind;
  double divergence;
};

/// D^A over the given times and kinds. One PDE run per outer point covers every time and
/// kind. outer_n <= 0 selects 20 (p = 1) or 12 (p = 2).
std::vector<KlPoint> kl_curves(const WnParams& params, std::span<const TpdKind> kinds, std::span<const double> times,
                               const FpeConfig& cfg, WindingTruncation trunc, Exec exec = Exec::parallel,
                               int outer_n = 0);

double kl_divergence(TpdKind kind, const WnParams& params, double t, const FpeConfig& cfg, WindingTruncation trunc,
                     Exec exec = Exec::parallel, int outer_n = 0);

}  // namespace tordiff

#endif  // TORDIFF_FOKKER_PLANCK_HPP_
