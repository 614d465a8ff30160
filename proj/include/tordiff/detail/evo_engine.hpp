#ifndef TORDIFF_DETAIL_EVO_ENGINE_HPP_
#define TORDIFF_DETAIL_EVO_ENGINE_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tordiff/detail/transition.hpp"
#include "tordiff/detail/wn_model.hpp"
#include "tordiff/evo_hmm.hpp"
#include "tordiff/rng.hpp"

namespace tordiff::detail {

/// Throws InvalidArgument unless the matrix is square (at least 2 x 2), finite, symmetric
/// to 1e-12 relative, with nonnegative off-diagonal entries not all zero.
void check_exchange(const Eigen::MatrixXd& s, const std::string& what);

/// Reversible CTMC with Q_ij = s_ij f_j scaled to unit expected rate.
class Ctmc {
 public:
  Ctmc(std::span<const double> freqs, const Eigen::MatrixXd& exchange);

  Eigen::MatrixXd transition(double t) const;
  const std::vector<double>& freqs() const noexcept { return freqs_; }

 private:
  std::vector<double> freqs_;
  Eigen::VectorXd root_;     // sqrt(f)
  Eigen::MatrixXd vectors_;  // eigenvectors of the symmetrised generator
  Eigen::VectorXd values_;
};

double site_class_prob(double gamma, const std::array<double, 2>& pi, SiteClassPair pair, double t);

/// Time-independent per-class quantities of a model.
struct ClassKernel {
  Ctmc chars;
  Ctmc ss;
  WnModel<2> wn;
};

class ModelKernel {
 public:
  explicit ModelKernel(const EvoModel& model);

  const EvoModel& model() const noexcept { return *model_; }
  const ClassKernel& cls(int state, int r) const { return classes_[static_cast<std::size_t>(2 * state + r - 1)]; }

  /// Product of the stationary densities of the observations of protein a (or b) in class r.
  double side_a(int state, int r, const SiteObservation& obs) const;
  double side_b(int state, int r, const SiteObservation& obs) const;
  /// Time-independent factor of constant evolution in class r: the stationary terms of the
  /// first present element of each observation type.
  double constant_static(int state, int r, const SiteObservation& obs) const;

 private:
  const EvoModel* model_;
  std::vector<ClassKernel> classes_;
};

/// Time-dependent quantities of a model at one evolutionary time.
class KernelAtTime {
 public:
  KernelAtTime(const ModelKernel& kernel, double t);

  double t() const noexcept { return t_; }
  /// Joint likelihood of one site under constant evolution in class r.
  double constant(int state, int r, const SiteObservation& obs) const {
    return kernel_->constant_static(state, r, obs) * constant_dynamic(state, r, obs);
  }
  /// Transition factors P_xy(t) and p_t(X_b | X_a) of the pairs observed on both sides.
  double constant_dynamic(int state, int r, const SiteObservation& obs) const;
  double class_prob(int state, SiteClassPair pair) const {
    return class_probs_[static_cast<std::size_t>(state)][index(pair)];
  }
  static std::size_t index(SiteClassPair pair) noexcept { return static_cast<std::size_t>(2 * (pair.ra - 1) + pair.rb - 1); }

 private:
  const ModelKernel* kernel_;
  double t_;
  std::vector<Eigen::MatrixXd> char_p_, ss_p_;
  std::vector<std::optional<TransitionDensity<2>>> wou_;
  std::vector<std::array<double, 4>> class_probs_;
};

/// Forward algorithm and FFBS for one aligned pair; caches time-independent factors.
class PairEngine {
 public:
  PairEngine(const ModelKernel& kernel, const AlignedPairData& data);

  const AlignedPairData& data() const noexcept { return *data_; }
  /// Terms L(obs | H = state, pair, t) p(pair | state, t) in kSiteClassPairs order.
  std::array<double, 4> pair_terms(const KernelAtTime& kt, std::size_t site, int state) const;
  double loglik(double t) const;
  FfbsDraw ffbs(double t, Rng& rng) const;

 private:
  /// Scaled forward variables (m x h) and log normalizer.
  double forward(const KernelAtTime& kt, Eigen::MatrixXd& alpha) const;

  const ModelKernel* kernel_;
  const AlignedPairData* data_;
  int h_;
  std::vector<double> side_a_, side_b_, static_;  // per site, state and class
};

/// One lognormal random-walk MH update of t targeting pair loglik + log Exp(rate) prior.
/// `log_post` holds the current target value; a proposal with a numeric failure is rejected.
void mh_step(const PairEngine& engine, double rate, double step, double& t, double& log_post, Rng& rng);

/// Log target at t; -inf on numeric failure.
double log_posterior(const PairEngine& engine, double rate, double t);

std::vector<double> mh_chain(const PairEngine& engine, double rate, std::size_t n_samples, const MhConfig& mh,
                             Rng& rng);

}  // namespace tordiff::detail

#endif  // TORDIFF_DETAIL_EVO_ENGINE_HPP_
