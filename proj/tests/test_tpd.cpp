#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tordiff/errors.hpp"
#include "tordiff/tpd.hpp"

using namespace tordiff;

namespace {

WnParams table_params(double alpha, double sigma) {
  return WnParams::toroidal(alpha, alpha, alpha / 2, TorusPoint(kPi / 2, -kPi / 2), sigma, sigma);
}

double grid_integral(int p, int m, const std::function<double(const TorusPoint&)>& f) {
  const auto v = oracle::tabulate(p, m, f);
  double s = 0.0;
  for (double x : v) s += x;
  const double h = kTwoPi / m;
  return s * (p == 1 ? h : h * h);
}

double ou_log_pdf(double x, double mean, double var) {
  return -0.5 * std::log(kTwoPi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

}  // namespace

TEST_CASE("tpd kind names") {
  for (TpdKind k : kAllTpdKinds) CHECK(parse_tpd_kind(to_string(k)) == k);
  CHECK(parse_tpd_kind("Euler") == TpdKind::euler);
  CHECK(parse_tpd_kind("shoji-ozaki") == TpdKind::shoji_ozaki);
  CHECK_THROWS_AS(parse_tpd_kind("milstein"), InvalidArgument);
}

TEST_CASE("trajectory validation and subsampling") {
  Trajectory t;
  t.delta = 0.1;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  for (int i = 0; i < 11; ++i) t.points.emplace_back(0.1 * i);
  CHECK_NOTHROW(t.validate());
  const Trajectory s = subsample(t, 5, 2);
  CHECK(s.delta == doctest::Approx(0.5));
  REQUIRE(s.points.size() == 3);
  CHECK(s.points[2] == t.points[10]);
  CHECK_THROWS_AS(subsample(t, 5, 3), InvalidArgument);
  t.points.emplace_back(0.0, 0.0);
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}

TEST_CASE("euler tpd examples") {
  const auto p = table_params(1.0, 1.0);
  const WindingTruncation k(2);
  const TorusPoint phi(0.3, 0.8);

  // Small step: mode at the drifted point.
  const double delta = 1e-6;
  const Eigen::VectorXd target = phi.vector() + wn_drift(phi, p, k) * delta;
  const int m = 256;
  const auto v = oracle::tabulate(2, m, [&](const TorusPoint& th) { return euler_tpd(th, phi, p, delta, k); });
  const auto best = std::max_element(v.begin(), v.end()) - v.begin();
  const double h = kTwoPi / m;
  CHECK(std::abs(oracle::centre(static_cast<int>(best / m), m) - target[0]) <= h);
  CHECK(std::abs(oracle::centre(static_cast<int>(best % m), m) - target[1]) <= h);

  // Large step: uniform.
  const auto one = WnParams::toroidal(1, 1, 0.5, TorusPoint(kPi / 2, -kPi / 2), 1, 1);
  double worst = 0.0;
  for (double f : oracle::tabulate(2, 64, [&](const TorusPoint& th) { return euler_tpd(th, phi, one, 100.0, k); }))
    worst = std::max(worst, std::abs(f - 1.0 / (kTwoPi * kTwoPi)));
  CHECK(worst < 1e-3);

  // p = 1 from the mean: no drift.
  const auto c = WnParams::circular(1.4, 0.7, 0.9);
  for (double th = -3.0; th < 3.1; th += 0.25) {
    const double e = euler_tpd(TorusPoint(th), c.mu(), c, 0.3, k);
    const double w = wn_density(TorusPoint(th), c.mu(), Eigen::MatrixXd::Constant(1, 1, 0.81 * 0.3), k);
    CHECK(e == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("linearised moments are exact for the OU process") {
  std::mt19937_64 gen(43);
  std::uniform_real_distribution<double> u(0.1, 3.0), x(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double alpha = u(gen), sigma = u(gen), mu = x(gen), phi = x(gen), delta = u(gen);
    const auto m = linearised_moments(Eigen::VectorXd::Constant(1, phi), Eigen::VectorXd::Constant(1, alpha * (mu - phi)),
                                      Eigen::MatrixXd::Constant(1, 1, -alpha),
                                      Eigen::MatrixXd::Constant(1, 1, sigma * sigma), delta);
    const double mean = mu + std::exp(-alpha * delta) * (phi - mu);
    const double var = sigma * sigma * (1 - std::exp(-2 * alpha * delta)) / (2 * alpha);
    CHECK(std::abs(m.mean[0] - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
    CHECK(std::abs(m.cov(0, 0) - var) <= 1e-12 * std::max(1.0, var));
    const double y = x(gen);
    const double lp = ou_log_pdf(y, m.mean[0], m.cov(0, 0));
    CHECK(std::abs(lp - ou_log_pdf(y, mean, var)) < 1e-12 * std::max(1.0, std::abs(lp)));
  }
}

TEST_CASE("shoji-ozaki examples") {
  const WindingTruncation k(3);
  const auto p = table_params(1.0, 1.0);

  // From mu with a long horizon: stationary-like limit with mean mu and cov -J^{-1} Sigma / 2.
  const Eigen::MatrixXd j = wn_drift_jacobian(p.mu(), p, k);
  const Eigen::MatrixXd lim = -0.5 * j.inverse() * diffusion_matrix(p);
  const auto so = shoji_ozaki_moments(p.mu(), p, 50.0, k);
  CHECK_FALSE(so.fallback);
  CHECK((so.mean - p.mu().vector()).norm() < 1e-12);
  CHECK((so.cov - lim).cwiseAbs().maxCoeff() < 1e-10);
  for (double a = -3.0; a < 3.1; a += 0.7)
    for (double b = -3.0; b < 3.1; b += 0.7) {
      const TorusPoint th(a, b);
      CHECK(shoji_ozaki_tpd(th, p.mu(), p, 50.0, k) ==
            doctest::Approx(wn_density(th, p.mu(), 0.5 * (lim + lim.transpose()), k)).epsilon(1e-9));
    }

  // Antipodal start: positive Jacobian eigenvalue, Euler fallback.
  const TorusPoint anti(p.mu()[0] + kPi, p.mu()[1] + kPi);
  CHECK(shoji_ozaki_moments(anti, p, 5.0, k).fallback);
  for (double a = -3.0; a < 3.1; a += 0.9) {
    const TorusPoint th(a, 0.5 * a);
    CHECK(shoji_ozaki_tpd(th, anti, p, 5.0, k) == euler_tpd(th, anti, p, 5.0, k));
  }
  const auto c = WnParams::circular(1.0, 0.0, 1.0);
  CHECK(shoji_ozaki_moments(TorusPoint(-kPi), c, 2.0, k).fallback);
  CHECK(shoji_ozaki_tpd(TorusPoint(1.0), TorusPoint(-kPi), c, 2.0, k) ==
        euler_tpd(TorusPoint(1.0), TorusPoint(-kPi), c, 2.0, k));
}

TEST_CASE("wou tpd corollaries") {
  const WindingTruncation k(2);
  const auto p = table_params(1.0, 1.0);

  // Point mass.
  {
    const auto c = WnParams::circular(1.0, 0.5, 1.0);
    const int m = 128;
    const TorusPoint from(oracle::centre(40, m));
    auto probs = oracle::tabulate(1, m, [&](const TorusPoint& th) { return wou_tpd(th, from, c, 1e-6, k); });
    double total = 0.0;
    for (double x : probs) total += x;
    CHECK(1.0 - probs[40] / total < 1e-2);
  }

  // Stationary limit.
  const Eigen::MatrixXd stat = stationary_cov(p);
  double worst = 0.0;
  for (double a = -3.0; a < 3.1; a += 0.5)
    for (double b = -3.0; b < 3.1; b += 0.5) {
      const TorusPoint from(a, b);
      for (double x = -3.0; x < 3.1; x += 1.0)
        for (double y = -3.0; y < 3.1; y += 1.0) {
          const TorusPoint th(x, y);
          worst = std::max(worst, std::abs(wou_tpd(th, from, p, 50.0, k) - wn_density(th, p.mu(), stat, k)));
        }
    }
  CHECK(worst < 1e-6);

  // Detailed balance.
  std::mt19937_64 gen(47);
  std::uniform_real_distribution<double> ang(-kPi, kPi), tt(0.01, 5.0);
  for (int i = 0; i < 500; ++i) {
    const TorusPoint a(ang(gen), ang(gen)), b(ang(gen), ang(gen));
    const double t = tt(gen);
    const double lhs = wn_density(a, p.mu(), stat, k) * wou_tpd(b, a, p, t, k);
    const double rhs = wn_density(b, p.mu(), stat, k) * wou_tpd(a, b, p, t, k);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("all tpds integrate to one") {
  for (double alpha : {1.0, 2.0})
    for (double sigma : {1.0, 2.0}) {
      const auto p = table_params(alpha, sigma);
      const auto k = WindingTruncation::for_spread(std::sqrt(stationary_cov(p).diagonal().maxCoeff()));
      for (double delta : {0.05, 0.2, 0.5, 1.0})
        for (TpdKind kind : kAllTpdKinds)
          for (const TorusPoint& from : {TorusPoint(0.2, -1.0), TorusPoint(-2.5, 1.5), p.mu()}) {
            CAPTURE(alpha);
            CAPTURE(sigma);
            CAPTURE(delta);
            CAPTURE(to_string(kind));
            const double mass =
                grid_integral(2, 128, [&](const TorusPoint& th) { return tpd(kind, th, from, p, delta, k); });
            CHECK(std::abs(mass - 1.0) < 1e-4);
          }
    }
  const auto c = WnParams::circular(1.0, 0.0, 1.0);
  for (TpdKind kind : kAllTpdKinds) {
    const double mass = grid_integral(
        1, 256, [&](const TorusPoint& th) { return tpd(kind, th, TorusPoint(2.0), c, 0.5, WindingTruncation(2)); });
    CHECK(std::abs(mass - 1.0) < 1e-4);
  }
}

TEST_CASE("euler and wou agree for small steps") {
  const auto c = WnParams::circular(1.0, 0.0, 1.0);
  const WindingTruncation k(2);
  const auto gap = [&](double from, double delta) {
    double worst = 0.0;
    for (double th = -kPi; th < kPi; th += kTwoPi / 4096) {
      const TorusPoint x(th);
      worst = std::max(worst, std::abs(euler_tpd(x, TorusPoint(from), c, delta, k) - wou_tpd(x, TorusPoint(from), c, delta, k)));
    }
    return worst;
  };
  for (double from : {0.0, 0.5, -1.5, 2.0}) {
    CAPTURE(from);
    CHECK(gap(from, 1e-3) < 1e-2);
  }
  // Next to the antipode the two winding components separate at rate ~ alpha*pi, so the
  // gap decays like sqrt(delta) only.
  const double g3 = gap(3.0, 1e-3), g4 = gap(3.0, 1e-4), g5 = gap(3.0, 1e-5);
  CHECK(g4 < g3);
  CHECK(g5 < g4);
  CHECK(g5 < 1e-2);
}

TEST_CASE("simulate_euler") {
  const auto c = WnParams::circular(2.0, 1.0, 1e-8);
  const Trajectory flow = simulate_euler(c, TorusPoint(-1.0), 0.01, 500, 10, 7);
  CHECK(angular_distance(flow.points.back(), c.mu()) < 1e-3);
  CHECK(flow.points.size() == 501);
  CHECK(flow.delta == 0.01);

  const auto p = table_params(1.0, 1.0);
  const Trajectory a = simulate_euler(p, TorusPoint(0.0, 0.0), 0.2, 50, 20, 123);
  const Trajectory b = simulate_euler(p, TorusPoint(0.0, 0.0), 0.2, 50, 20, 123);
  CHECK(a == b);
  const Trajectory d = simulate_euler(p, TorusPoint(0.0, 0.0), 0.2, 50, 20, 124);
  CHECK_FALSE(a == d);

  // Long-run histogram against the stationary density.
  const auto s = WnParams::circular(1.0, 0.0, 1.0);
  const Trajectory longrun = simulate_euler(s, TorusPoint(0.0), 0.05, 200000, 10, 99);
  const int bins = 64;
  std::vector<double> hist(bins, 0.0);
  for (const auto& pt : longrun.points) hist[static_cast<std::size_t>(oracle::cell(pt[0], bins))] += 1.0;
  const auto probs = oracle::cell_probs(1, bins, 8, [&](const TorusPoint& th) {
    return wn_density(th, s.mu(), stationary_cov(s), WindingTruncation(2));
  });
  double l1 = 0.0;
  for (int i = 0; i < bins; ++i) l1 += std::abs(hist[i] / longrun.points.size() - probs[i]);
  CHECK(l1 < 0.05);
}

TEST_CASE("sample_wou") {
  const auto p = table_params(1.0, 1.0);
  const WindingTruncation k(2);
  const int n = 100000;
  Rng rng(2024);

  {
    const int m = 16;
    std::vector<double> obs(m * m, 0.0);
    for (int i = 0; i < n; ++i) {
      const TorusPoint x = sample_wou(TorusPoint(2.0, 2.0), p, 50.0, k, rng);
      obs[static_cast<std::size_t>(oracle::cell(x[0], m) * m + oracle::cell(x[1], m))] += 1.0;
    }
    auto expected = oracle::cell_probs(2, m, 8, [&](const TorusPoint& th) {
      return wn_density(th, p.mu(), stationary_cov(p), k);
    });
    for (double& e : expected) e *= n;
    CHECK(oracle::chi_square_p(obs, expected) > 0.01);
  }
  {
    const int m = 64;
    const TorusPoint from(-2.0, 3.0);
    std::vector<double> obs(m * m, 0.0);
    for (int i = 0; i < n; ++i) {
      const TorusPoint x = sample_wou(from, p, 0.25, k, rng);
      obs[static_cast<std::size_t>(oracle::cell(x[0], m) * m + oracle::cell(x[1], m))] += 1.0;
    }
    auto expected = oracle::cell_probs(2, m, 4, [&](const TorusPoint& th) { return wou_tpd(th, from, p, 0.25, k); });
    for (double& e : expected) e *= n;
    CHECK(oracle::chi_square_p(obs, expected) > 0.01);
  }

  const TorusPoint from(0.4, -2.9);
  for (int i = 0; i < 100; ++i) CHECK(angular_distance(sample_wou(from, p, 1e-8, k, rng), from) < 1e-3);
  CHECK(sample_wou(from, p, 0.5, k, std::uint64_t{5}) == sample_wou(from, p, 0.5, k, std::uint64_t{5}));
}
