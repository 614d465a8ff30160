#ifndef TORDIFF_EXPERIMENTS_HPP_
#define TORDIFF_EXPERIMENTS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tordiff/exec.hpp"
#include "tordiff/fokker_planck.hpp"
#include "tordiff/tpd.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

inline constexpr int kDefaultReplicates = 200;
inline constexpr int kFullReplicates = 1000;
/// Fewer replicates than this make the table carry a low-replicate warning.
inline constexpr int kLowReplicates = 30;
/// Cells whose failure rate exceeds this are flagged.
inline constexpr double kMaxFailureRate = 0.05;

/// One relative-efficiency study: fine-step Euler paths from the stationary law,
/// subsampled to each spacing and fitted with sigma known under each kind.
struct Scenario {
  std::string name = "scenario";
  WnParams params;
  std::vector<double> deltas{1.0};
  int n_obs = 250;
  int replicates = kDefaultReplicates;
  std::vector<TpdKind> kinds{TpdKind::euler, TpdKind::shoji_ozaki, TpdKind::wou};
  std::uint64_t seed = 1;
  double fine_step = 0.001;

  /// Throws ConfigError unless replicates >= 1, n_obs >= 10, deltas are nonempty positive
  /// multiples of fine_step and kinds are nonempty and distinct.
  void validate() const;

  bool operator==(const Scenario&) const = default;
};

std::string scenario_to_json(const Scenario& scn);
Scenario scenario_from_json(const std::string& text);

/// The scenarios of the relative-efficiency table: alpha1 = alpha2 = a, alpha3 = a / 2,
/// mu = (pi/2, -pi/2), Sigma = s^2 I for a, s in {1, 2}.
std::vector<Scenario> table_scenarios(std::span<const double> deltas, int replicates, std::uint64_t seed);

/// Names of the estimated components: (alpha, mu) for p = 1, (alpha1, alpha2, alpha3,
/// mu1, mu2) for p = 2.
std::vector<std::string> re_components(int dim);

struct ReCell {
  std::string scenario;
  double delta = 0.0;
  TpdKind kind = TpdKind::wou;
  int replicates = 0;
  int failures = 0;
  bool flagged = false;          // failure rate above kMaxFailureRate
  std::vector<double> mse;       // per component; mu errors wrapped
  std::vector<double> re;        // per component: min over kinds / own MSE
  std::vector<bool> best;        // this kind attains the component minimum
  double re_mean = 0.0;          // componentwise average

  bool operator==(const ReCell&) const = default;
};

struct ReTable {
  std::vector<std::string> components;
  std::vector<ReCell> cells;
  std::vector<std::string> warnings;

  /// Throws InvalidArgument when the cell is absent.
  const ReCell& cell(const std::string& scenario, double delta, TpdKind kind) const;

  bool operator==(const ReTable&) const = default;
};

/// Index of the smallest MSE; ties go to the kind whose name sorts first.
std::size_t best_kind(std::span<const TpdKind> kinds, std::span<const double> mse);

/// Monte Carlo relative efficiencies. Replicate r uses a stream derived from (seed, r), so
/// the table does not depend on the thread count. Failed fits are excluded from their
/// kind's MSE and counted. Ties for the best MSE go to the first kind in name order.
ReTable run_re_experiment(const Scenario& scn, Exec exec = Exec::parallel);
/// Concatenation of several scenarios' tables (all must share the dimension).
ReTable run_re_experiments(std::span<const Scenario> scns, Exec exec = Exec::parallel);

/// Version line, warning comments, header
/// "scenario,delta,kind,replicates,failures,flagged,re,mse_<c>...,re_<c>...,best_<c>...".
void write_re_table_csv(std::ostream& os, const ReTable& table);

/// Rows "t,kind,divergence" of kl_curves.
void run_kl_curves(std::ostream& os, const WnParams& params, std::span<const TpdKind> kinds,
                   std::span<const double> times, const FpeConfig& cfg, Exec exec = Exec::parallel);

}  // namespace tordiff

#endif  // TORDIFF_EXPERIMENTS_HPP_
