#include "tordiff/evo_hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "tordiff/detail/evo_engine.hpp"
#include "tordiff/detail/parallel.hpp"
#include "tordiff/detail/wn_encoding.hpp"
#include "tordiff/errors.hpp"
#include "tordiff/optimize.hpp"
#include "tordiff/rng.hpp"
#include "tordiff/tpd.hpp"

namespace tordiff {

namespace {

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(what + " must have positive entries");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10) throw InvalidArgument(what + " must sum to 1");
}

void check_symbol(const std::optional<int>& s, int n, const char* what) {
  if (s && (*s < 0 || *s >= n)) throw InvalidArgument(std::string(what) + " symbol out of range");
}

void check_angle(const std::optional<TorusPoint>& x) {
  if (x && x->dim() != 2) throw InvalidArgument("angle observations must be points on T^2");
}

}  // namespace

void EvoModel::validate() const {
  const int n = h();
  if (n < 1) throw InvalidArgument("model needs at least one hidden state");
  if (trans.rows() != n || trans.cols() != n) throw InvalidArgument("transition matrix must be h x h");
  if (init.size() != n) throw InvalidArgument("initial distribution must have length h");
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd row = trans.row(i).transpose();
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("transition probabilities must be nonnegative");
    if (std::abs(row.sum() - 1.0) > 1e-10) throw InvalidArgument("transition rows must sum to 1");
    if (!(init[i] >= 0.0) || !std::isfinite(init[i])) throw InvalidArgument("initial probabilities must be nonnegative");
  }
  if (std::abs(init.sum() - 1.0) > 1e-10) throw InvalidArgument("initial distribution must sum to 1");
  detail::check_exchange(char_exchange, "character exchangeabilities");
  detail::check_exchange(ss_exchange, "secondary-class exchangeabilities");
  for (const auto& s : states) {
    if (!(s.gamma > 0.0) || !std::isfinite(s.gamma)) throw InvalidArgument("jump rates must be positive");
    check_distribution(s.pi, "site-class probabilities");
    for (const auto& c : s.classes) {
      if (static_cast<int>(c.char_freqs.size()) != char_alphabet())
        throw InvalidArgument("character frequencies do not match the alphabet");
      if (static_cast<int>(c.ss_freqs.size()) != ss_alphabet())
        throw InvalidArgument("secondary-class frequencies do not match the alphabet");
      check_distribution(c.char_freqs, "character frequencies");
      check_distribution(c.ss_freqs, "secondary-class frequencies");
      if (c.wn.dim() != 2) throw InvalidArgument("angle processes must be bivariate");
    }
  }
}

void AlignedPairData::validate(const EvoModel& model) const {
  if (sites.empty()) throw InvalidArgument("aligned pair has no sites");
  bool any = false;
  for (const auto& s : sites) {
    check_symbol(s.char_a, model.char_alphabet(), "character");
    check_symbol(s.char_b, model.char_alphabet(), "character");
    check_symbol(s.ss_a, model.ss_alphabet(), "secondary-class");
    check_symbol(s.ss_b, model.ss_alphabet(), "secondary-class");
    check_angle(s.x_a);
    check_angle(s.x_b);
    any = any || !s.empty();
  }
  if (!any) throw InvalidArgument("aligned pair has no observations");
}

AlignedPairData AlignedPairData::swapped() const {
  AlignedPairData out = *this;
  for (auto& s : out.sites) {
    std::swap(s.char_a, s.char_b);
    std::swap(s.x_a, s.x_b);
    std::swap(s.ss_a, s.ss_b);
  }
  return out;
}

EvoModel make_model(const std::vector<std::array<WnParams, 2>>& angles, int char_alphabet, int ss_alphabet) {
  if (angles.empty()) throw InvalidArgument("make_model needs at least one state");
  if (char_alphabet < 2 || ss_alphabet < 2) throw InvalidArgument("alphabets need at least two symbols");
  const int h = static_cast<int>(angles.size());
  EvoModel m;
  m.trans = Eigen::MatrixXd::Constant(h, h, 1.0 / h);
  m.init = Eigen::VectorXd::Constant(h, 1.0 / h);
  m.char_exchange = Eigen::MatrixXd::Ones(char_alphabet, char_alphabet);
  m.ss_exchange = Eigen::MatrixXd::Ones(ss_alphabet, ss_alphabet);
  for (const auto& a : angles) {
    HiddenStateParams s;
    for (int r = 0; r < 2; ++r) {
      auto& c = s.classes[static_cast<std::size_t>(r)];
      c.char_freqs.assign(static_cast<std::size_t>(char_alphabet), 1.0 / char_alphabet);
      c.ss_freqs.assign(static_cast<std::size_t>(ss_alphabet), 1.0 / ss_alphabet);
      c.wn = a[static_cast<std::size_t>(r)];
    }
    m.states.push_back(s);
  }
  m.validate();
  return m;
}

Eigen::MatrixXd ctmc_transition(std::span<const double> freqs, const Eigen::MatrixXd& exchange, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("ctmc_transition: t must be nonnegative");
  check_distribution(freqs, "CTMC frequencies");
  return detail::Ctmc(freqs, exchange).transition(t);
}

double site_class_prob(const HiddenStateParams& state, SiteClassPair pair, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("site_class_prob: t must be nonnegative");
  if (pair.ra < 1 || pair.ra > 2 || pair.rb < 1 || pair.rb > 2) throw InvalidArgument("site classes are 1 or 2");
  return detail::site_class_prob(state.gamma, state.pi, pair, t);
}

double site_pair_likelihood(const EvoModel& model, int state, SiteClassPair pair, const SiteObservation& obs,
                            double t) {
  model.validate();
  if (state < 0 || state >= model.h()) throw InvalidArgument("hidden state out of range");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("site_pair_likelihood: t must be nonnegative");
  AlignedPairData one{{obs}};
  if (!obs.empty()) one.validate(model);
  const detail::ModelKernel k(model);
  if (pair.jump()) return k.side_a(state, pair.ra, obs) * k.side_b(state, pair.rb, obs);
  if (obs.x_a && obs.x_b && !(t > 0.0))
    throw InvalidArgument("constant evolution of an angle pair needs t > 0");
  const detail::KernelAtTime kt(k, t);
  return kt.constant(state, pair.ra, obs);
}

double site_emission(const EvoModel& model, int state, const SiteObservation& obs, double t) {
  double e = 0.0;
  for (const auto& pair : kSiteClassPairs)
    e += site_pair_likelihood(model, state, pair, obs, t) * site_class_prob(model.states[static_cast<std::size_t>(state)], pair, t);
  return e;
}

double pair_loglik(const EvoModel& model, const AlignedPairData& data, double t) {
  model.validate();
  data.validate(model);
  const detail::ModelKernel k(model);
  return detail::PairEngine(k, data).loglik(t);
}

FfbsDraw ffbs_sample(const EvoModel& model, const AlignedPairData& data, double t, std::uint64_t seed) {
  model.validate();
  data.validate(model);
  const detail::ModelKernel k(model);
  Rng rng(seed);
  return detail::PairEngine(k, data).ffbs(t, rng);
}

std::vector<double> mh_time_posterior(const EvoModel& model, const AlignedPairData& data, double prior_rate,
                                      std::size_t n_samples, std::uint64_t seed, const MhConfig& mh) {
  model.validate();
  data.validate(model);
  const detail::ModelKernel k(model);
  const detail::PairEngine engine(k, data);
  Rng rng(seed);
  return detail::mh_chain(engine, prior_rate, n_samples, mh, rng);
}

std::vector<std::vector<TorusPoint>> predict_missing_chain(const EvoModel& model, const AlignedPairData& data,
                                                           double prior_rate, std::size_t n_samples,
                                                           std::uint64_t seed, const MhConfig& mh) {
  model.validate();
  if (data.sites.empty()) throw InvalidArgument("aligned pair has no sites");
  bool any = false;
  for (const auto& s : data.sites) {
    if (s.x_b) throw InvalidArgument("predict_missing_chain: X_b must be missing");
    any = any || !s.empty();
  }
  if (any) data.validate(model);
  if (!(prior_rate > 0.0)) throw InvalidArgument("prior rate must be positive");
  if (n_samples < 1) throw InvalidArgument("n_samples must be at least 1");

  const detail::ModelKernel k(model);
  const detail::PairEngine engine(k, data);
  Rng rng(seed);
  std::vector<double> times;
  if (any) {
    times = detail::mh_chain(engine, prior_rate, n_samples, mh, rng);
  } else {
    for (std::size_t i = 0; i < n_samples; ++i) times.push_back(rng.exponential(prior_rate));
  }

  std::vector<std::vector<TorusPoint>> out;
  out.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng draw(Rng::derive_seed(seed, s + 1));
    const double t = times[s];
    const FfbsDraw f = engine.ffbs(t, draw);
    std::vector<TorusPoint> xb;
    xb.reserve(data.length());
    for (std::size_t i = 0; i < data.length(); ++i) {
      const auto& state = model.states[static_cast<std::size_t>(f.hidden[i])];
      const SiteClassPair r = f.classes[i];
      const WnParams& wn = state.classes[static_cast<std::size_t>(r.rb - 1)].wn;
      const auto& xa = data.sites[i].x_a;
      if (!r.jump() && xa)
        xb.push_back(sample_wou(*xa, wn, t, default_truncation(wn), draw));
      else
        xb.push_back(sample_stationary(wn, draw));
    }
    out.push_back(std::move(xb));
  }
  return out;
}

SimulatedPair simulate_pair(const EvoModel& model, std::size_t m, double t, std::uint64_t seed) {
  model.validate();
  if (m < 1) throw InvalidArgument("simulate_pair needs at least one site");
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("simulate_pair: t must be positive");
  Rng rng(seed);
  SimulatedPair out;
  const auto row = [](const Eigen::MatrixXd& mat, int i) {
    std::vector<double> v(static_cast<std::size_t>(mat.cols()));
    for (int j = 0; j < mat.cols(); ++j) v[static_cast<std::size_t>(j)] = mat(i, j);
    return v;
  };
  std::vector<double> init(model.init.data(), model.init.data() + model.init.size());
  int h = static_cast<int>(rng.categorical(init));
  for (std::size_t i = 0; i < m; ++i) {
    if (i > 0) h = static_cast<int>(rng.categorical(row(model.trans, h)));
    const auto& st = model.states[static_cast<std::size_t>(h)];
    const int rb = 1 + static_cast<int>(rng.categorical(st.pi));
    const double stay = std::exp(-st.gamma * t);
    std::array<double, 2> cond{};
    for (int ra = 1; ra <= 2; ++ra)
      cond[static_cast<std::size_t>(ra - 1)] = (ra == rb ? stay : 0.0) + st.pi[static_cast<std::size_t>(ra - 1)] * (1.0 - stay);
    const int ra = 1 + static_cast<int>(rng.categorical(cond));
    const auto& ca = st.classes[static_cast<std::size_t>(ra - 1)];
    const auto& cb = st.classes[static_cast<std::size_t>(rb - 1)];
    SiteObservation o;
    o.char_a = static_cast<int>(rng.categorical(ca.char_freqs));
    o.ss_a = static_cast<int>(rng.categorical(ca.ss_freqs));
    o.x_a = sample_stationary(ca.wn, rng);
    if (ra == rb) {
      o.char_b = static_cast<int>(rng.categorical(row(ctmc_transition(ca.char_freqs, model.char_exchange, t), *o.char_a)));
      o.ss_b = static_cast<int>(rng.categorical(row(ctmc_transition(ca.ss_freqs, model.ss_exchange, t), *o.ss_a)));
      o.x_b = sample_wou(*o.x_a, ca.wn, t, default_truncation(ca.wn), rng);
    } else {
      o.char_b = static_cast<int>(rng.categorical(cb.char_freqs));
      o.ss_b = static_cast<int>(rng.categorical(cb.ss_freqs));
      o.x_b = sample_stationary(cb.wn, rng);
    }
    out.data.sites.push_back(o);
    out.hidden.push_back(h);
    out.classes.push_back({ra, rb});
  }
  return out;
}

namespace {

constexpr double kTransPseudocount = 1e-3;
constexpr double kFreqPseudocount = 0.5;
constexpr double kMaxLogGamma = 10.0;
constexpr double kMaxLogit = 14.0;

struct PairSample {
  double t = 1.0;
  double log_post = 0.0;
  FfbsDraw draw;
};

struct AngleTerms {
  std::vector<Eigen::Vector2d> single;
  // Constant-evolution pairs grouped by the time of their aligned pair.
  std::vector<std::pair<double, std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>>> joint;
};

double angle_objective(const WnParams& p, const AngleTerms& terms) {
  const detail::WnModel<2> wn(p, default_truncation(p));
  double total = 0.0;
  for (const auto& x : terms.single) total += wn.log_stationary(x);
  for (const auto& [t, pairs] : terms.joint) {
    if (pairs.empty()) continue;
    const detail::TransitionDensity<2> td(TpdKind::wou, wn, t);
    for (const auto& [xa, xb] : pairs) total += wn.log_stationary(xa) + td.log_density(xb, xa);
  }
  return total;
}

std::vector<double> normalised_counts(const std::vector<double>& counts) {
  std::vector<double> out(counts.size());
  double total = 0.0;
  for (double c : counts) total += c + kFreqPseudocount;
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = (counts[i] + kFreqPseudocount) / total;
  return out;
}

void fit_class_probs(HiddenStateParams& st, const std::vector<std::pair<SiteClassPair, double>>& sites, int budget) {
  const auto f = [&](const Eigen::VectorXd& x) {
    if (std::abs(x[0]) > kMaxLogGamma || std::abs(x[1]) > kMaxLogit) return std::numeric_limits<double>::infinity();
    const double gamma = std::exp(x[0]);
    const double p1 = 1.0 / (1.0 + std::exp(-x[1]));
    const std::array<double, 2> pi{p1, 1.0 - p1};
    double total = 0.0;
    for (const auto& [pair, t] : sites) total += std::log(detail::site_class_prob(gamma, pi, pair, t));
    return std::isfinite(total) ? -total : std::numeric_limits<double>::infinity();
  };
  Eigen::VectorXd x0(2);
  x0 << std::clamp(std::log(st.gamma), -kMaxLogGamma, kMaxLogGamma),
      std::clamp(std::log(st.pi[0] / st.pi[1]), -kMaxLogit, kMaxLogit);
  NelderMeadOptions opt;
  opt.max_evaluations = budget;
  const NelderMeadResult r = nelder_mead(f, x0, Eigen::VectorXd::Constant(2, 0.5), opt);
  if (!std::isfinite(r.value) || r.value > f(x0)) return;
  st.gamma = std::exp(r.x[0]);
  const double p1 = 1.0 / (1.0 + std::exp(-r.x[1]));
  st.pi = {p1, 1.0 - p1};
}

void fit_angles(SiteClassParams& c, const AngleTerms& terms, int budget) {
  const detail::WnEncoding enc{2, false, {1.0, 1.0}};
  const auto f = [&](const Eigen::VectorXd& x) {
    const auto p = enc.decode(x);
    if (!p) return std::numeric_limits<double>::infinity();
    const double v = angle_objective(*p, terms);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  NelderMeadOptions opt;
  opt.max_evaluations = budget;
  opt.periodic = enc.periodic();
  const Eigen::VectorXd x0 = enc.encode(c.wn);
  const NelderMeadResult r = nelder_mead(f, x0, enc.step(), opt);
  const auto best = enc.decode(r.x);
  if (best && std::isfinite(r.value) && r.value <= f(x0)) c.wn = *best;
}

/// Exchangeabilities as exp of free log entries of the upper triangle, the first fixed at 1.
Eigen::MatrixXd decode_exchange(const Eigen::VectorXd& x, int n) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  int k = -1;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      s(i, j) = s(j, i) = k < 0 ? 1.0 : std::exp(x[k]);
      ++k;
    }
  return s;
}

struct ExchangeTerm {
  int state, r;
  double t;
  int x, y;
};

void fit_exchange(Eigen::MatrixXd& exchange, const EvoModel& model, bool characters,
                  const std::vector<ExchangeTerm>& terms, int budget) {
  const int n = static_cast<int>(exchange.rows());
  const int free = n * (n - 1) / 2 - 1;
  if (free < 1 || terms.empty()) return;
  const auto f = [&](const Eigen::VectorXd& x) {
    if (x.cwiseAbs().maxCoeff() > 10.0) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd s = decode_exchange(x, n);
    double total = 0.0;
    std::vector<std::optional<detail::Ctmc>> ctmcs(2 * model.states.size());
    for (const auto& e : terms) {
      auto& c = ctmcs[static_cast<std::size_t>(2 * e.state + e.r - 1)];
      const auto& cls = model.states[static_cast<std::size_t>(e.state)].classes[static_cast<std::size_t>(e.r - 1)];
      if (!c) c.emplace(characters ? cls.char_freqs : cls.ss_freqs, s);
      total += std::log(c->transition(e.t)(e.x, e.y));
    }
    return std::isfinite(total) ? -total : std::numeric_limits<double>::infinity();
  };
  Eigen::VectorXd x0(free);
  int k = -1;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (k >= 0) x0[k] = std::clamp(std::log(exchange(i, j) / exchange(0, 1)), -10.0, 10.0);
      ++k;
    }
  NelderMeadOptions opt;
  opt.max_evaluations = budget;
  const NelderMeadResult r = nelder_mead(f, x0, Eigen::VectorXd::Constant(free, 0.5), opt);
  if (std::isfinite(r.value) && r.value <= f(x0)) exchange = decode_exchange(r.x, n);
}

double complete_loglik(const detail::ModelKernel& kernel, const AlignedPairData& data, const PairSample& s) {
  const EvoModel& m = kernel.model();
  const detail::PairEngine engine(kernel, data);
  const detail::KernelAtTime kt(kernel, s.t);
  double total = std::log(m.init[s.draw.hidden[0]]);
  for (std::size_t i = 0; i < data.length(); ++i) {
    if (i > 0) total += std::log(m.trans(s.draw.hidden[i - 1], s.draw.hidden[i]));
    const auto terms = engine.pair_terms(kt, i, s.draw.hidden[i]);
    total += std::log(terms[detail::KernelAtTime::index(s.draw.classes[i])]);
  }
  return total;
}

}  // namespace

TrainResult stem_train(const EvoModel& initial, std::span<const AlignedPairData> dataset, int iters,
                       std::uint64_t seed, const TrainConfig& cfg) {
  initial.validate();
  if (dataset.empty()) throw InvalidArgument("stem_train needs a nonempty dataset");
  if (iters < 0) throw InvalidArgument("iteration count must be nonnegative");
  if (!(cfg.prior_rate > 0.0) || cfg.mh_steps < 1 || cfg.mstep_evaluations < 10)
    throw ConfigError("training needs prior_rate > 0, mh_steps >= 1 and mstep_evaluations >= 10");
  for (const auto& d : dataset) d.validate(initial);

  TrainResult out;
  out.model = initial;
  EvoModel& model = out.model;
  const int h = model.h();
  const std::size_t n = dataset.size();
  std::vector<PairSample> samples(n);
  const MhConfig mh;

  for (int it = 0; it < iters; ++it) {
    {
      const detail::ModelKernel kernel(model);
      detail::for_range(cfg.exec, n, [&](std::size_t j) {
        Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(it) * n + j));
        const detail::PairEngine engine(kernel, dataset[j]);
        PairSample& s = samples[j];
        if (it == 0) s.t = mh.initial_t;
        s.log_post = detail::log_posterior(engine, cfg.prior_rate, s.t);
        for (int k = 0; k < cfg.mh_steps; ++k) detail::mh_step(engine, cfg.prior_rate, mh.step, s.t, s.log_post, rng);
        s.draw = engine.ffbs(s.t, rng);
      });
    }

    const auto note = [&](const std::string& what) {
      out.notes.push_back("iteration " + std::to_string(it + 1) + ": " + what);
    };

    // Hidden-state chain.
    Eigen::VectorXd init_counts = Eigen::VectorXd::Zero(h);
    Eigen::MatrixXd trans_counts = Eigen::MatrixXd::Zero(h, h);
    for (const auto& s : samples) {
      init_counts[s.draw.hidden[0]] += 1.0;
      for (std::size_t i = 1; i < s.draw.hidden.size(); ++i) trans_counts(s.draw.hidden[i - 1], s.draw.hidden[i]) += 1.0;
    }
    init_counts.array() += kTransPseudocount;
    model.init = init_counts / init_counts.sum();
    for (int a = 0; a < h; ++a) {
      if (trans_counts.row(a).sum() == 0.0) {
        note("no transitions sampled out of state " + std::to_string(a) + ", transition row unchanged");
        continue;
      }
      Eigen::RowVectorXd row = trans_counts.row(a).array() + kTransPseudocount;
      model.trans.row(a) = row / row.sum();
    }

    // Per-state emission statistics.
    std::vector<std::vector<std::pair<SiteClassPair, double>>> class_sites(static_cast<std::size_t>(h));
    std::vector<std::array<std::vector<double>, 2>> char_counts(static_cast<std::size_t>(h)), ss_counts(static_cast<std::size_t>(h));
    std::vector<std::array<AngleTerms, 2>> angles(static_cast<std::size_t>(h));
    std::vector<ExchangeTerm> char_terms, ss_terms;
    for (auto& c : char_counts) c.fill(std::vector<double>(static_cast<std::size_t>(model.char_alphabet()), 0.0));
    for (auto& c : ss_counts) c.fill(std::vector<double>(static_cast<std::size_t>(model.ss_alphabet()), 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      const PairSample& s = samples[j];
      std::vector<std::size_t> group(static_cast<std::size_t>(2 * h), 0);
      for (int st = 0; st < h; ++st)
        for (int r = 0; r < 2; ++r) {
          auto& joint = angles[static_cast<std::size_t>(st)][static_cast<std::size_t>(r)].joint;
          joint.emplace_back(s.t, std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>{});
        }
      for (std::size_t i = 0; i < dataset[j].length(); ++i) {
        const SiteObservation& o = dataset[j].sites[i];
        const int st = s.draw.hidden[i];
        const SiteClassPair pair = s.draw.classes[i];
        const auto us = static_cast<std::size_t>(st);
        class_sites[us].emplace_back(pair, s.t);
        const auto ra = static_cast<std::size_t>(pair.ra - 1), rb = static_cast<std::size_t>(pair.rb - 1);
        if (o.char_a) char_counts[us][ra][static_cast<std::size_t>(*o.char_a)] += 1.0;
        if (o.char_b) char_counts[us][rb][static_cast<std::size_t>(*o.char_b)] += 1.0;
        if (o.ss_a) ss_counts[us][ra][static_cast<std::size_t>(*o.ss_a)] += 1.0;
        if (o.ss_b) ss_counts[us][rb][static_cast<std::size_t>(*o.ss_b)] += 1.0;
        if (!pair.jump() && o.char_a && o.char_b) char_terms.push_back({st, pair.ra, s.t, *o.char_a, *o.char_b});
        if (!pair.jump() && o.ss_a && o.ss_b) ss_terms.push_back({st, pair.ra, s.t, *o.ss_a, *o.ss_b});
        if (!pair.jump() && o.x_a && o.x_b) {
          angles[us][ra].joint.back().second.emplace_back(detail::to_vec<2>(*o.x_a), detail::to_vec<2>(*o.x_b));
        } else {
          if (o.x_a) angles[us][ra].single.push_back(detail::to_vec<2>(*o.x_a));
          if (o.x_b) angles[us][rb].single.push_back(detail::to_vec<2>(*o.x_b));
        }
      }
    }

    for (int st = 0; st < h; ++st) {
      const auto us = static_cast<std::size_t>(st);
      HiddenStateParams& p = model.states[us];
      if (class_sites[us].empty()) {
        note("state " + std::to_string(st) + " was not sampled, parameters unchanged");
        continue;
      }
      fit_class_probs(p, class_sites[us], cfg.mstep_evaluations);
      for (std::size_t r = 0; r < 2; ++r) {
        p.classes[r].char_freqs = normalised_counts(char_counts[us][r]);
        p.classes[r].ss_freqs = normalised_counts(ss_counts[us][r]);
        const AngleTerms& terms = angles[us][r];
        bool any = !terms.single.empty();
        for (const auto& g : terms.joint) any = any || !g.second.empty();
        if (any)
          fit_angles(p.classes[r], terms, cfg.mstep_evaluations);
        else
          note("state " + std::to_string(st) + " class " + std::to_string(r + 1) + " has no angles, WN parameters unchanged");
      }
    }
    if (cfg.train_exchange) {
      fit_exchange(model.char_exchange, model, true, char_terms, cfg.mstep_evaluations);
      fit_exchange(model.ss_exchange, model, false, ss_terms, cfg.mstep_evaluations);
    }
    model.validate();

    const detail::ModelKernel kernel(model);
    std::vector<double> per_pair(n);
    detail::for_range(cfg.exec, n, [&](std::size_t j) { per_pair[j] = complete_loglik(kernel, dataset[j], samples[j]); });
    double mean = 0.0;
    for (double v : per_pair) mean += v;
    out.log.push_back(mean / static_cast<double>(n));
  }
  return out;
}

}  // namespace tordiff
