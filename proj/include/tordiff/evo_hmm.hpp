#ifndef TORDIFF_EVO_HMM_HPP_
#define TORDIFF_EVO_HMM_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tordiff/exec.hpp"
#include "tordiff/torus.hpp"
#include "tordiff/wn_diffusion.hpp"

namespace tordiff {

/// Site classes (r_a, r_b), each 1 or 2; a jump when they differ.
struct SiteClassPair {
  int ra = 1;
  int rb = 1;

  bool jump() const noexcept { return ra != rb; }
  bool operator==(const SiteClassPair&) const = default;
};

inline constexpr SiteClassPair kSiteClassPairs[] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};

/// Emission parameters of one site class.
struct SiteClassParams {
  std::vector<double> char_freqs;  // stationary frequencies of the character CTMC
  std::vector<double> ss_freqs;    // stationary frequencies of the secondary-class CTMC
  WnParams wn;                     // bivariate WN process of the angle pair

  bool operator==(const SiteClassParams&) const = default;
};

struct HiddenStateParams {
  double gamma = 1.0;                  // jump rate
  std::array<double, 2> pi{0.5, 0.5};  // stationary site-class probabilities
  std::array<SiteClassParams, 2> classes;

  bool operator==(const HiddenStateParams&) const = default;
};

struct EvoModel {
  std::vector<HiddenStateParams> states;
  Eigen::MatrixXd trans;           // h x h, row-stochastic
  Eigen::VectorXd init;            // length h
  Eigen::MatrixXd char_exchange;   // symmetric exchangeabilities, shared by all states
  Eigen::MatrixXd ss_exchange;

  int h() const noexcept { return static_cast<int>(states.size()); }
  int char_alphabet() const noexcept { return static_cast<int>(char_exchange.rows()); }
  int ss_alphabet() const noexcept { return static_cast<int>(ss_exchange.rows()); }

  /// Throws InvalidArgument on shape mismatches, non-stochastic trans/init (1e-10),
  /// frequency vectors that are not positive and normalised, gamma <= 0, non-symmetric
  /// exchangeabilities, or angle processes that are not bivariate.
  void validate() const;

  bool operator==(const EvoModel&) const = default;
};

/// One aligned site; every element may be missing independently.
struct SiteObservation {
  std::optional<int> char_a, char_b;
  std::optional<TorusPoint> x_a, x_b;
  std::optional<int> ss_a, ss_b;

  bool empty() const noexcept { return !char_a && !char_b && !x_a && !x_b && !ss_a && !ss_b; }
  bool operator==(const SiteObservation&) const = default;
};

struct AlignedPairData {
  std::vector<SiteObservation> sites;

  std::size_t length() const noexcept { return sites.size(); }
  /// Throws InvalidArgument if there are no sites, no observation at all, or a symbol or
  /// angle does not fit the model's alphabets.
  void validate(const EvoModel& model) const;
  /// The same data with the roles of proteins a and b exchanged.
  AlignedPairData swapped() const;

  bool operator==(const AlignedPairData&) const = default;
};

/// A model with h states and the given alphabet sizes: uniform init and trans, all-ones
/// exchangeabilities, uniform frequencies, gamma = 1, pi = (1/2, 1/2) and the supplied
/// angle processes (one per state and class).
EvoModel make_model(const std::vector<std::array<WnParams, 2>>& angles, int char_alphabet = 4, int ss_alphabet = 2);

/// P(t) = exp(Qt) for the reversible rate matrix Q_ij = s_ij f_j (i != j) scaled to unit
/// expected rate, via the eigendecomposition of its symmetrised form.
Eigen::MatrixXd ctmc_transition(std::span<const double> freqs, const Eigen::MatrixXd& exchange, double t);

/// p(r_a | H, r_b, t) p(r_b | H) with p(r_a | r_b, t) = 1{r_a = r_b} e^{-gamma t} + pi_{r_a}(1 - e^{-gamma t}).
double site_class_prob(const HiddenStateParams& state, SiteClassPair pair, double t);

/// Likelihood of one site given the hidden state and site-class pair. Constant evolution
/// uses the joint densities pi_x P_xy(t) and f_WN(X_a) p^WOU_t(X_b | X_a); a jump uses the
/// product of the stationary densities of the two classes. Missing elements contribute 1
/// and single-sided observations their stationary density.
double site_pair_likelihood(const EvoModel& model, int state, SiteClassPair pair, const SiteObservation& obs, double t);

/// Sum over site-class pairs of site_pair_likelihood times site_class_prob.
double site_emission(const EvoModel& model, int state, const SiteObservation& obs, double t);

/// Forward-algorithm log-likelihood log p(P_a, P_b | t). Throws NumericError with the
/// site index when every state has zero emission at a site.
double pair_loglik(const EvoModel& model, const AlignedPairData& data, double t);

struct FfbsDraw {
  std::vector<int> hidden;               // state index per site, 0-based
  std::vector<SiteClassPair> classes;    // site-class pair per site
  double log_normalizer = 0.0;           // equals pair_loglik
};

/// Exact posterior draw of the hidden states by forward filtering backward sampling,
/// followed by a site-class pair per site drawn in proportion to its emission term.
FfbsDraw ffbs_sample(const EvoModel& model, const AlignedPairData& data, double t, std::uint64_t seed);

struct MhConfig {
  double step = 0.3;       // sd of the log-normal random-walk proposal
  double burn_in = 0.2;    // fraction of the chain discarded
  double initial_t = 1.0;
};

/// Metropolis-Hastings draws from p(t | data) with an exponential(prior_rate) prior.
/// Returns n_samples post-burn-in states.
std::vector<double> mh_time_posterior(const EvoModel& model, const AlignedPairData& data, double prior_rate,
                                      std::size_t n_samples, std::uint64_t seed, const MhConfig& mh = {});

/// Posterior draws of the missing angle chain X_b: for each draw, t from the posterior
/// chain, hidden states and site classes by FFBS, then X_b from the stationary law of
/// r_b after a jump, from the WOU transition of X_a under constant evolution, and from
/// the stationary law when X_a is missing. Data without any observation gives draws from
/// the model itself (t from the prior). Throws InvalidArgument if some X_b is present.
std::vector<std::vector<TorusPoint>> predict_missing_chain(const EvoModel& model, const AlignedPairData& data,
                                                           double prior_rate, std::size_t n_samples,
                                                           std::uint64_t seed, const MhConfig& mh = {});

struct SimulatedPair {
  AlignedPairData data;
  std::vector<int> hidden;
  std::vector<SiteClassPair> classes;
};

/// Draws a fully observed aligned pair of length m at evolutionary time t from the model.
SimulatedPair simulate_pair(const EvoModel& model, std::size_t m, double t, std::uint64_t seed);

struct TrainConfig {
  double prior_rate = 0.1;
  int mh_steps = 20;            // MH moves per pair and iteration, continuing each pair's chain
  int mstep_evaluations = 300;  // Nelder-Mead budget per M-step block
  bool train_exchange = false;  // exchangeabilities stay fixed unless set
  Exec exec = Exec::parallel;
};

struct TrainResult {
  EvoModel model;
  std::vector<double> log;          // mean complete-data log-likelihood per iteration
  std::vector<std::string> notes;   // states left unchanged for lack of samples
};

/// Stochastic EM: E-step draws (t, H, r_a, r_b) per pair by MH and FFBS; M-step sets init
/// and trans to sampled proportions and refits (gamma, pi), the CTMC frequencies and the WN
/// parameters of each state and class on the sampled complete data. Reproducible for a
/// seed regardless of the thread count.
TrainResult stem_train(const EvoModel& initial, std::span<const AlignedPairData> dataset, int iters,
                       std::uint64_t seed, const TrainConfig& cfg = {});

}  // namespace tordiff

#endif  // TORDIFF_EVO_HMM_HPP_
