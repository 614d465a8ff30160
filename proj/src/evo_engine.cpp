#include "tordiff/detail/evo_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "tordiff/errors.hpp"

namespace tordiff::detail {

namespace {

Vec<2> vec2(const TorusPoint& p) { return to_vec<2>(p); }

}  // namespace

void check_exchange(const Eigen::MatrixXd& s, const std::string& what) {
  if (s.rows() != s.cols() || s.rows() < 2) throw InvalidArgument(what + " must be a square matrix of size >= 2");
  if (!s.allFinite()) throw InvalidArgument(what + " must be finite");
  bool any = false;
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) {
      if (i == j) continue;
      const double scale = std::max({std::abs(s(i, j)), std::abs(s(j, i)), 1e-300});
      if (std::abs(s(i, j) - s(j, i)) > 1e-12 * scale) throw InvalidArgument(what + " must be symmetric");
      if (s(i, j) < 0.0) throw InvalidArgument(what + " must be nonnegative");
      any = any || s(i, j) > 0.0;
    }
  if (!any) throw InvalidArgument(what + " must have a positive off-diagonal entry");
}

Ctmc::Ctmc(std::span<const double> freqs, const Eigen::MatrixXd& exchange) : freqs_(freqs.begin(), freqs.end()) {
  check_exchange(exchange, "exchangeability matrix");
  const auto n = static_cast<int>(freqs_.size());
  if (exchange.rows() != n) throw InvalidArgument("exchangeabilities and frequencies differ in size");
  root_.resize(n);
  for (int i = 0; i < n; ++i) root_[i] = std::sqrt(freqs_[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  double rate = 0.0;
  for (int i = 0; i < n; ++i) {
    double out = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      b(i, j) = exchange(i, j) * root_[i] * root_[j];
      out += exchange(i, j) * freqs_[static_cast<std::size_t>(j)];
    }
    b(i, i) = -out;
    rate += freqs_[static_cast<std::size_t>(i)] * out;
  }
  b /= rate;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  vectors_ = es.eigenvectors();
  values_ = es.eigenvalues();
}

Eigen::MatrixXd Ctmc::transition(double t) const {
  const Eigen::VectorXd e = (values_ * t).array().exp().matrix();
  Eigen::MatrixXd p = root_.cwiseInverse().asDiagonal() * vectors_ * e.asDiagonal() * vectors_.transpose() *
                      root_.asDiagonal();
  p = p.cwiseMax(0.0);
  if (t == 0.0) p.setIdentity();
  return p;
}

double site_class_prob(double gamma, const std::array<double, 2>& pi, SiteClassPair pair, double t) {
  const double stay = std::exp(-gamma * t);
  const double move = -std::expm1(-gamma * t);
  const double pa = pi[static_cast<std::size_t>(pair.ra - 1)];
  const double pb = pi[static_cast<std::size_t>(pair.rb - 1)];
  if (pair.jump()) return (pa * pb) * move;
  return (stay + pa * move) * pb;
}

ModelKernel::ModelKernel(const EvoModel& model) : model_(&model) {
  classes_.reserve(2 * model.states.size());
  for (const auto& s : model.states)
    for (const auto& c : s.classes)
      classes_.push_back(ClassKernel{Ctmc(c.char_freqs, model.char_exchange), Ctmc(c.ss_freqs, model.ss_exchange),
                                     WnModel<2>(c.wn, default_truncation(c.wn))});
}

namespace {

double side(const ClassKernel& k, const std::optional<int>& ch, const std::optional<TorusPoint>& x,
            const std::optional<int>& ss) {
  double v = 1.0;
  if (ch) v *= k.chars.freqs()[static_cast<std::size_t>(*ch)];
  if (ss) v *= k.ss.freqs()[static_cast<std::size_t>(*ss)];
  if (x) v *= std::exp(k.wn.log_stationary(vec2(*x)));
  return v;
}

}  // namespace

double ModelKernel::side_a(int state, int r, const SiteObservation& obs) const {
  return side(cls(state, r), obs.char_a, obs.x_a, obs.ss_a);
}

double ModelKernel::side_b(int state, int r, const SiteObservation& obs) const {
  return side(cls(state, r), obs.char_b, obs.x_b, obs.ss_b);
}

double ModelKernel::constant_static(int state, int r, const SiteObservation& obs) const {
  return side(cls(state, r), obs.char_a ? obs.char_a : obs.char_b, obs.x_a ? obs.x_a : obs.x_b,
              obs.ss_a ? obs.ss_a : obs.ss_b);
}

KernelAtTime::KernelAtTime(const ModelKernel& kernel, double t) : kernel_(&kernel), t_(t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolutionary time must be nonnegative");
  const EvoModel& m = kernel.model();
  for (int s = 0; s < m.h(); ++s) {
    std::array<double, 4> probs{};
    for (const auto& pair : kSiteClassPairs)
      probs[index(pair)] = site_class_prob(m.states[static_cast<std::size_t>(s)].gamma,
                                           m.states[static_cast<std::size_t>(s)].pi, pair, t);
    class_probs_.push_back(probs);
    for (int r = 1; r <= 2; ++r) {
      const ClassKernel& k = kernel.cls(s, r);
      char_p_.push_back(k.chars.transition(t));
      ss_p_.push_back(k.ss.transition(t));
      if (t > 0.0)
        wou_.emplace_back(std::in_place, TpdKind::wou, k.wn, t);
      else
        wou_.emplace_back();
    }
  }
}

double KernelAtTime::constant_dynamic(int state, int r, const SiteObservation& obs) const {
  const auto u = static_cast<std::size_t>(2 * state + r - 1);
  double v = 1.0;
  if (obs.char_a && obs.char_b) v *= char_p_[u](*obs.char_a, *obs.char_b);
  if (obs.ss_a && obs.ss_b) v *= ss_p_[u](*obs.ss_a, *obs.ss_b);
  if (obs.x_a && obs.x_b) {
    if (!wou_[u]) throw InvalidArgument("constant evolution of an angle pair needs t > 0");
    v *= std::exp(wou_[u]->log_density(vec2(*obs.x_b), vec2(*obs.x_a)));
  }
  return v;
}

PairEngine::PairEngine(const ModelKernel& kernel, const AlignedPairData& data)
    : kernel_(&kernel), data_(&data), h_(kernel.model().h()) {
  const std::size_t m = data.length();
  side_a_.resize(m * static_cast<std::size_t>(h_) * 2);
  side_b_.resize(side_a_.size());
  static_.resize(side_a_.size());
  for (std::size_t i = 0; i < m; ++i)
    for (int s = 0; s < h_; ++s)
      for (int r = 1; r <= 2; ++r) {
        const std::size_t u = (i * static_cast<std::size_t>(h_) + static_cast<std::size_t>(s)) * 2 + static_cast<std::size_t>(r - 1);
        side_a_[u] = kernel.side_a(s, r, data.sites[i]);
        side_b_[u] = kernel.side_b(s, r, data.sites[i]);
        static_[u] = kernel.constant_static(s, r, data.sites[i]);
      }
}

std::array<double, 4> PairEngine::pair_terms(const KernelAtTime& kt, std::size_t site, int state) const {
  const SiteObservation& obs = data_->sites[site];
  const std::size_t base = (site * static_cast<std::size_t>(h_) + static_cast<std::size_t>(state)) * 2;
  std::array<double, 4> out{};
  for (const auto& pair : kSiteClassPairs) {
    const double p = kt.class_prob(state, pair);
    double l = 0.0;
    if (p > 0.0) {
      l = pair.jump() ? side_a_[base + static_cast<std::size_t>(pair.ra - 1)] * side_b_[base + static_cast<std::size_t>(pair.rb - 1)]
                      : static_[base + static_cast<std::size_t>(pair.ra - 1)] * kt.constant_dynamic(state, pair.ra, obs);
    }
    out[KernelAtTime::index(pair)] = l * p;
  }
  return out;
}

double PairEngine::forward(const KernelAtTime& kt, Eigen::MatrixXd& alpha) const {
  const EvoModel& model = kernel_->model();
  const std::size_t m = data_->length();
  alpha.resize(static_cast<Eigen::Index>(m), h_);
  double log_norm = 0.0;
  Eigen::RowVectorXd prev;
  for (std::size_t i = 0; i < m; ++i) {
    Eigen::RowVectorXd a(h_);
    for (int s = 0; s < h_; ++s) {
      const auto terms = pair_terms(kt, i, s);
      const double e = terms[0] + terms[1] + terms[2] + terms[3];
      const double prior = i == 0 ? model.init[s] : prev.dot(model.trans.col(s));
      a[s] = prior * e;
    }
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw NumericError("every hidden state has zero emission at site " + std::to_string(i), i);
    a /= c;
    log_norm += std::log(c);
    alpha.row(static_cast<Eigen::Index>(i)) = a;
    prev = a;
  }
  return log_norm;
}

double PairEngine::loglik(double t) const {
  const KernelAtTime kt(*kernel_, t);
  Eigen::MatrixXd alpha;
  return forward(kt, alpha);
}

FfbsDraw PairEngine::ffbs(double t, Rng& rng) const {
  const KernelAtTime kt(*kernel_, t);
  Eigen::MatrixXd alpha;
  FfbsDraw out;
  out.log_normalizer = forward(kt, alpha);
  const std::size_t m = data_->length();
  const EvoModel& model = kernel_->model();
  out.hidden.assign(m, 0);
  out.classes.assign(m, SiteClassPair{});
  std::vector<double> w(static_cast<std::size_t>(h_));
  for (std::size_t k = m; k-- > 0;) {
    for (int s = 0; s < h_; ++s) {
      double v = alpha(static_cast<Eigen::Index>(k), s);
      if (k + 1 < m) v *= model.trans(s, out.hidden[k + 1]);
      w[static_cast<std::size_t>(s)] = v;
    }
    out.hidden[k] = static_cast<int>(rng.categorical(w));
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto terms = pair_terms(kt, i, out.hidden[i]);
    out.classes[i] = kSiteClassPairs[rng.categorical(terms)];
  }
  return out;
}

double log_posterior(const PairEngine& engine, double rate, double t) {
  try {
    const double v = engine.loglik(t) - rate * t;
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const NumericError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

void mh_step(const PairEngine& engine, double rate, double step, double& t, double& log_post, Rng& rng) {
  const double proposal = t * std::exp(step * rng.normal());
  const double u = rng.uniform();
  if (!(proposal > 0.0) || !std::isfinite(proposal)) return;
  const double lp = log_posterior(engine, rate, proposal);
  const double log_ratio = lp - log_post + std::log(proposal / t);
  if (std::log(u) < log_ratio || !std::isfinite(log_post)) {
    if (std::isfinite(lp)) {
      t = proposal;
      log_post = lp;
    }
  }
}

std::vector<double> mh_chain(const PairEngine& engine, double rate, std::size_t n_samples, const MhConfig& mh,
                             Rng& rng) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("prior rate must be positive");
  if (n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  if (!(mh.step > 0.0) || !(mh.burn_in >= 0.0 && mh.burn_in < 1.0) || !(mh.initial_t > 0.0))
    throw InvalidArgument("MH configuration needs step > 0, burn_in in [0, 1) and initial_t > 0");
  const auto total = static_cast<std::size_t>(std::ceil(static_cast<double>(n_samples) / (1.0 - mh.burn_in)));
  const std::size_t burn = total - n_samples;
  double t = mh.initial_t;
  double lp = log_posterior(engine, rate, t);
  std::vector<double> out;
  out.reserve(n_samples);
  for (std::size_t k = 0; k < total; ++k) {
    mh_step(engine, rate, mh.step, t, lp, rng);
    if (k >= burn) out.push_back(t);
  }
  return out;
}

}  // namespace tordiff::detail
