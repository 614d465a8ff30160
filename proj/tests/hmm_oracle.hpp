#ifndef TORDIFF_TESTS_HMM_ORACLE_HPP_
#define TORDIFF_TESTS_HMM_ORACLE_HPP_

// Random models and an enumeration oracle for the evolution HMM, shared by test binaries.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "tordiff/evo_hmm.hpp"
#include "tordiff/tpd.hpp"

namespace hmm_oracle {

using namespace tordiff;
using Eigen::MatrixXd;


using Gen = std::mt19937_64;

inline double unif(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

inline std::vector<double> random_freqs(Gen& g, int n) {
  std::vector<double> f(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& v : f) total += v = unif(g, 0.2, 1.0);
  for (auto& v : f) v /= total;
  return f;
}

inline MatrixXd random_exchange(Gen& g, int n) {
  MatrixXd s = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s(i, j) = s(j, i) = unif(g, 0.3, 3.0);
  return s;
}

inline WnParams random_wn(Gen& g) {
  const double a1 = unif(g, 0.5, 3.0), a2 = unif(g, 0.5, 3.0);
  return WnParams::toroidal(a1, a2, unif(g, -0.6, 0.6) * std::sqrt(a1 * a2), TorusPoint(unif(g, -3, 3), unif(g, -3, 3)),
                            unif(g, 0.5, 1.5), unif(g, 0.5, 1.5));
}

inline EvoModel random_model(Gen& g, int h, int chars = 4, int ss = 2) {
  EvoModel m;
  m.char_exchange = random_exchange(g, chars);
  m.ss_exchange = random_exchange(g, ss);
  m.trans.resize(h, h);
  m.init.resize(h);
  const auto init = random_freqs(g, h);
  for (int i = 0; i < h; ++i) {
    m.init[i] = init[static_cast<std::size_t>(i)];
    const auto row = random_freqs(g, h);
    for (int j = 0; j < h; ++j) m.trans(i, j) = row[static_cast<std::size_t>(j)];
    HiddenStateParams s;
    s.gamma = unif(g, 0.3, 2.0);
    const double p1 = unif(g, 0.2, 0.8);
    s.pi = {p1, 1.0 - p1};
    for (auto& c : s.classes) c = SiteClassParams{random_freqs(g, chars), random_freqs(g, ss), random_wn(g)};
    m.states.push_back(s);
  }
  return m;
}

inline TorusPoint random_point(Gen& g) { return TorusPoint(unif(g, -kPi, kPi), unif(g, -kPi, kPi)); }

inline AlignedPairData random_pair_data(Gen& g, const EvoModel& m, int len, double keep = 0.7) {
  AlignedPairData d;
  std::bernoulli_distribution present(keep);
  std::uniform_int_distribution<int> ch(0, m.char_alphabet() - 1), ss(0, m.ss_alphabet() - 1);
  for (int i = 0; i < len; ++i) {
    SiteObservation o;
    if (present(g)) o.char_a = ch(g);
    if (present(g)) o.char_b = ch(g);
    if (present(g)) o.ss_a = ss(g);
    if (present(g)) o.ss_b = ss(g);
    if (present(g)) o.x_a = random_point(g);
    if (present(g)) o.x_b = random_point(g);
    d.sites.push_back(o);
  }
  if (d.sites[0].empty()) d.sites[0].char_a = 0;
  return d;
}

// Independent formulas: Eigen's matrix exponential, the public WN density and WOU tpd,
// and sums over every hidden sequence and site-class assignment.
namespace ref {

inline MatrixXd ctmc(const std::vector<double>& f, const MatrixXd& s, double t) {
  const int n = static_cast<int>(f.size());
  MatrixXd q = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) q(i, j) = s(i, j) * f[static_cast<std::size_t>(j)];
  for (int i = 0; i < n; ++i) q(i, i) = -q.row(i).sum();
  double rate = 0.0;
  for (int i = 0; i < n; ++i) rate -= f[static_cast<std::size_t>(i)] * q(i, i);
  return (q * (t / rate)).exp();
}

inline double stat(const TorusPoint& x, const WnParams& p) {
  return wn_density(x, p.mu(), stationary_cov(p), default_truncation(p));
}

inline double scp(const HiddenStateParams& s, int ra, int rb, double t) {
  const double e = std::exp(-s.gamma * t);
  const double pa = s.pi[static_cast<std::size_t>(ra - 1)], pb = s.pi[static_cast<std::size_t>(rb - 1)];
  return ra == rb ? pa * (e + pa * (1.0 - e)) : pa * pb * (1.0 - e);
}

inline double site(const EvoModel& m, int h, int ra, int rb, const SiteObservation& o, double t, bool angles = true) {
  const auto& st = m.states[static_cast<std::size_t>(h)];
  const auto& ca = st.classes[static_cast<std::size_t>(ra - 1)];
  const auto& cb = st.classes[static_cast<std::size_t>(rb - 1)];
  double v = 1.0;
  if (ra != rb) {
    if (o.char_a) v *= ca.char_freqs[static_cast<std::size_t>(*o.char_a)];
    if (o.char_b) v *= cb.char_freqs[static_cast<std::size_t>(*o.char_b)];
    if (o.ss_a) v *= ca.ss_freqs[static_cast<std::size_t>(*o.ss_a)];
    if (o.ss_b) v *= cb.ss_freqs[static_cast<std::size_t>(*o.ss_b)];
    if (angles && o.x_a) v *= stat(*o.x_a, ca.wn);
    if (angles && o.x_b) v *= stat(*o.x_b, cb.wn);
    return v;
  }
  if (o.char_a && o.char_b)
    v *= ca.char_freqs[static_cast<std::size_t>(*o.char_a)] * ctmc(ca.char_freqs, m.char_exchange, t)(*o.char_a, *o.char_b);
  else if (o.char_a)
    v *= ca.char_freqs[static_cast<std::size_t>(*o.char_a)];
  else if (o.char_b)
    v *= ca.char_freqs[static_cast<std::size_t>(*o.char_b)];
  if (o.ss_a && o.ss_b)
    v *= ca.ss_freqs[static_cast<std::size_t>(*o.ss_a)] * ctmc(ca.ss_freqs, m.ss_exchange, t)(*o.ss_a, *o.ss_b);
  else if (o.ss_a)
    v *= ca.ss_freqs[static_cast<std::size_t>(*o.ss_a)];
  else if (o.ss_b)
    v *= ca.ss_freqs[static_cast<std::size_t>(*o.ss_b)];
  if (angles) {
    if (o.x_a && o.x_b)
      v *= stat(*o.x_a, ca.wn) * wou_tpd(*o.x_b, *o.x_a, ca.wn, t, default_truncation(ca.wn));
    else if (o.x_a)
      v *= stat(*o.x_a, ca.wn);
    else if (o.x_b)
      v *= stat(*o.x_b, ca.wn);
  }
  return v;
}

// Joint probability of every hidden sequence (summed over site classes by enumeration).
inline std::vector<double> sequence_probs(const EvoModel& m, const AlignedPairData& d, double t, bool angles = true) {
  const int h = m.h();
  const int len = static_cast<int>(d.length());
  // table[i][state][ra][rb]
  std::vector<std::array<std::array<std::array<double, 2>, 2>, 3>> table(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i)
    for (int s = 0; s < h; ++s)
      for (int ra = 1; ra <= 2; ++ra)
        for (int rb = 1; rb <= 2; ++rb)
          table[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)][static_cast<std::size_t>(ra - 1)]
               [static_cast<std::size_t>(rb - 1)] =
              site(m, s, ra, rb, d.sites[static_cast<std::size_t>(i)], t, angles) *
              scp(m.states[static_cast<std::size_t>(s)], ra, rb, t);
  int nseq = 1, nclass = 1;
  for (int i = 0; i < len; ++i) nseq *= h, nclass *= 4;
  std::vector<double> out(static_cast<std::size_t>(nseq), 0.0);
  std::vector<int> hs(static_cast<std::size_t>(len));
  for (int code = 0; code < nseq; ++code) {
    int c = code;
    for (int i = 0; i < len; ++i) hs[static_cast<std::size_t>(i)] = c % h, c /= h;
    double chain = m.init[hs[0]];
    for (int i = 1; i < len; ++i) chain *= m.trans(hs[static_cast<std::size_t>(i - 1)], hs[static_cast<std::size_t>(i)]);
    double acc = 0.0;
    for (int cc = 0; cc < nclass; ++cc) {
      int k = cc;
      double v = chain;
      for (int i = 0; i < len; ++i) {
        const int r = k % 4;
        k /= 4;
        v *= table[static_cast<std::size_t>(i)][static_cast<std::size_t>(hs[static_cast<std::size_t>(i)])]
                  [static_cast<std::size_t>(r / 2)][static_cast<std::size_t>(r % 2)];
      }
      acc += v;
    }
    out[static_cast<std::size_t>(code)] = acc;
  }
  return out;
}

inline double loglik(const EvoModel& m, const AlignedPairData& d, double t, bool angles = true) {
  double total = 0.0;
  for (double v : sequence_probs(m, d, t, angles)) total += v;
  return std::log(total);
}

}  // namespace ref

}  // namespace hmm_oracle

#endif  // TORDIFF_TESTS_HMM_ORACLE_HPP_
