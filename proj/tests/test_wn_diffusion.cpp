#include <cmath>
#include <random>

#include "doctest.h"
#include "tordiff/errors.hpp"
#include "tordiff/wn_diffusion.hpp"

using namespace tordiff;

namespace {

// Scaling and squaring with a 30-term Taylor series.
Eigen::Matrix2d taylor_expm(const Eigen::Matrix2d& m) {
  int squarings = 0;
  double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.25) {
    norm /= 2.0;
    ++squarings;
  }
  const Eigen::Matrix2d x = m / std::pow(2.0, squarings);
  Eigen::Matrix2d term = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * x / k;
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Eigen::Matrix2d simpson_gamma(const Eigen::Matrix2d& a, const Eigen::Matrix2d& sigma, double t) {
  const int n = 1000;
  const double h = t / n;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (int i = 0; i <= n; ++i) {
    const Eigen::Matrix2d e = taylor_expm(-i * h * a);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * e * sigma * e.transpose();
  }
  return acc * h / 3.0;
}

double rel_err(const Eigen::MatrixXd& x, const Eigen::MatrixXd& ref) {
  return (x - ref).cwiseAbs().maxCoeff() / std::max(1e-300, ref.cwiseAbs().maxCoeff());
}

WnParams random_params(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(0.2, 3.0);
  std::uniform_real_distribution<double> unit(-0.95, 0.95);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  const double a1 = pos(gen), a2 = pos(gen);
  return WnParams::toroidal(a1, a2, unit(gen) * std::sqrt(a1 * a2), TorusPoint(ang(gen), ang(gen)), pos(gen),
                            pos(gen));
}

}  // namespace

TEST_CASE("parameter constraints") {
  CHECK_THROWS_AS(WnParams::toroidal(1, 1, 1, TorusPoint(0.0, 0.0), 1, 1), ConstraintViolation);
  CHECK_THROWS_AS(WnParams::toroidal(-1, 1, 0, TorusPoint(0.0, 0.0), 1, 1), ConstraintViolation);
  CHECK_THROWS_AS(WnParams::toroidal(1, 1, 0, TorusPoint(0.0, 0.0), 0, 1), ConstraintViolation);
  CHECK_THROWS_AS(WnParams::circular(0, 0, 1), ConstraintViolation);
  CHECK_NOTHROW(WnParams::toroidal(1, 1, 0.99, TorusPoint(0.0, 0.0), 1, 1));
}

TEST_CASE("drift matrix examples") {
  const auto p0 = WnParams::toroidal(1, 1, 0, TorusPoint(0.0, 0.0), 1, 1);
  CHECK(build_drift_matrix(p0).isApprox(Eigen::Matrix2d::Identity()));
  const auto p1 = WnParams::toroidal(2, 1, 0.5, TorusPoint(0.0, 0.0), 1, 1);
  Eigen::Matrix2d expect;
  expect << 2, 0.5, 0.5, 1;
  CHECK(build_drift_matrix(p1).isApprox(expect));
  const auto p2 = WnParams::toroidal(2, 1, 0.5, TorusPoint(0.0, 0.0), 1, 2);
  CHECK(build_drift_matrix(p2)(0, 1) == doctest::Approx(0.25));
  CHECK(build_drift_matrix(p2)(1, 0) == doctest::Approx(1.0));

  for (double a3 : {-0.7, -0.1, 0.3, 0.8}) {
    const auto p = WnParams::toroidal(1.5, 1.0, a3, TorusPoint(0.0, 0.0), 0.8, 1.3);
    CHECK(stationary_cov(p)(0, 1) * a3 < 0.0);
  }
}

TEST_CASE("stationary covariance") {
  CHECK(stationary_cov(Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()).isApprox(0.5 * Eigen::Matrix2d::Identity()));
  // alpha1 = alpha2 = alpha, alpha3 = alpha / 2, Sigma = sigma^2 I.
  const double al = 1.7, s = 0.9;
  const auto p = WnParams::toroidal(al, al, al / 2, TorusPoint(0.0, 0.0), s, s);
  Eigen::Matrix2d expect;
  expect << 1.0, -0.5, -0.5, 1.0;
  expect *= s * s / (2.0 * al * 0.75);
  CHECK(rel_err(stationary_cov(p), expect) < 1e-12);

  std::mt19937_64 gen(17);
  for (int i = 0; i < 100; ++i) {
    const auto q = random_params(gen);
    const Eigen::Matrix2d a = build_drift_matrix(q);
    const Eigen::Matrix2d sig = diffusion_matrix(q);
    const Eigen::Matrix2d oracle = 0.5 * a.inverse() * sig;
    const Eigen::MatrixXd generic = stationary_cov(a, sig);
    const Eigen::MatrixXd closed = stationary_cov(q);
    CHECK(rel_err(generic, oracle) < 1e-10);
    CHECK(rel_err(closed, oracle) < 1e-10);
    CHECK(std::abs(generic(0, 1) - generic(1, 0)) < 1e-12 * generic.cwiseAbs().maxCoeff());
    CHECK(closed.determinant() > 0.0);
    CHECK(closed(0, 0) > 0.0);
  }
  Eigen::Matrix2d sing;
  sing << 1, 1, 1, 1;
  CHECK_THROWS_AS(stationary_cov(sing, Eigen::Matrix2d::Identity()), InvalidArgument);
  CHECK(stationary_cov(WnParams::circular(2.0, 0.0, 1.5))(0, 0) == doctest::Approx(1.5 * 1.5 / 4.0));
}

TEST_CASE("matrix exponential") {
  CHECK(mat_exp_2x2(Eigen::Matrix2d::Random(), 0.0).isApprox(Eigen::Matrix2d::Identity()));
  const Eigen::Matrix2d d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  const Eigen::Matrix2d ed = mat_exp_2x2(d, 1.0);
  CHECK(ed(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  CHECK(ed(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-13));
  CHECK(std::abs(ed(0, 1)) < 1e-14);

  Eigen::Matrix2d a;
  a << 1.5, -0.5, -0.5, 1.0;
  for (double t : {0.1, 1.0, 5.0}) CHECK(rel_err(mat_exp_2x2(a, t), taylor_expm(t * a)) < 1e-9);

  // Complex eigenvalues, repeated eigenvalues and near-degenerate cases.
  std::vector<Eigen::Matrix2d> cases;
  Eigen::Matrix2d m;
  m << 0.3, -2.0, 1.5, -0.4;
  cases.push_back(m);
  m << 1.0, 1.0, 0.0, 1.0;
  cases.push_back(m);
  m << 2.0, 1e-9, 0.0, 2.0;
  cases.push_back(m);
  m << -1.0, 3.0, 2.0, -4.0;
  cases.push_back(m);
  for (const auto& c : cases)
    for (double t : {-2.0, -0.3, 0.01, 0.7, 3.0}) CHECK(rel_err(mat_exp_2x2(c, t), taylor_expm(t * c)) < 1e-9);
}

TEST_CASE("matrix exponential semigroup") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0), tt(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    Eigen::Matrix2d a;
    a << u(gen), u(gen), u(gen), u(gen);
    const double t = tt(gen), s = tt(gen);
    CHECK(rel_err(mat_exp_2x2(a, t + s), mat_exp_2x2(a, t) * mat_exp_2x2(a, s)) < 1e-9);
  }
}

TEST_CASE("gamma_t") {
  Eigen::Matrix2d a;
  a << 2.0, 0.5, 0.5, 1.0;
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  CHECK((gamma_t(a, id, 0.7) - simpson_gamma(a, id, 0.7)).cwiseAbs().maxCoeff() < 1e-7);

  std::mt19937_64 gen(29);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(gen);
    const Eigen::Matrix2d ap = build_drift_matrix(p), sp = diffusion_matrix(p);
    const double t = 0.05 + 0.1 * i;
    CHECK(rel_err(gamma_t(ap, sp, t), simpson_gamma(ap, sp, t)) < 1e-7);

    const double lmin = Eigen::EigenSolver<Eigen::Matrix2d>(ap).eigenvalues().real().minCoeff();
    CHECK(rel_err(gamma_t(ap, sp, 50.0 / lmin), stationary_cov(p)) < 1e-8);
    CHECK(rel_err(gamma_t(ap, sp, 1e-6) / 1e-6, sp) < 1e-4);

    // Monotone in t.
    const Eigen::Matrix2d diff = gamma_t(ap, sp, t + 0.3) - gamma_t(ap, sp, t);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(diff).eigenvalues().minCoeff() >= -1e-10);
  }

  const Eigen::MatrixXd g1 = gamma_t(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 0.5), 0.4);
  CHECK(g1(0, 0) == doctest::Approx(0.5 * (1 - std::exp(-1.6)) / 4.0).epsilon(1e-14));
  CHECK_THROWS_AS(gamma_t(Eigen::Matrix2d::Zero(), id, 1.0), InvalidArgument);
}

TEST_CASE("wn_drift examples") {
  const WindingTruncation k(3);
  const auto p = WnParams::toroidal(1.2, 0.8, 0.3, TorusPoint(0.5, -1.0), 1.1, 0.7);
  CHECK(wn_drift(p.mu(), p, k).norm() < 1e-14);

  const auto c = WnParams::circular(1.0, 0.4, 1.0);
  CHECK(std::abs(wn_drift(TorusPoint(0.4 + kPi), c, k)[0]) < 1e-12);
  const auto c0 = WnParams::circular(1.0, 0.0, 1.0);
  CHECK(wn_drift(TorusPoint(0.01), c0, k)[0] == doctest::Approx(-0.01).epsilon(0.02));
}

TEST_CASE("wn_drift is periodic") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  const WindingTruncation k(2);
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(gen);
    const TorusPoint th(ang(gen), ang(gen));
    const Eigen::VectorXd b = wn_drift(th, p, k);
    for (int k1 = -2; k1 <= 2; ++k1)
      for (int k2 = -2; k2 <= 2; ++k2) {
        const Eigen::VectorXd shifted(Eigen::Vector2d(th[0] + kTwoPi * k1, th[1] + kTwoPi * k2));
        const Eigen::VectorXd b2 = wn_drift(wrap(shifted), p, k);
        CHECK((b2 - b).cwiseAbs().maxCoeff() < 1e-12);
      }
  }
}

TEST_CASE("wn_drift matches the Langevin construction") {
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    auto p = random_params(gen);
    while (stationary_cov(p).diagonal().maxCoeff() > 64.0) p = random_params(gen);
    const Eigen::MatrixXd s = stationary_cov(p);
    const auto k = WindingTruncation::for_spread(std::sqrt(s.diagonal().maxCoeff()));
    const TorusPoint th(ang(gen), ang(gen));
    Eigen::Vector2d grad;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d up(th[0], th[1]), dn(th[0], th[1]);
      up[j] += h;
      dn[j] -= h;
      grad[j] = (wn_log_density(wrap(Eigen::VectorXd(up)), p.mu(), s, k) -
                 wn_log_density(wrap(Eigen::VectorXd(dn)), p.mu(), s, k)) /
                (2 * h);
    }
    const Eigen::VectorXd fd = 0.5 * diffusion_matrix(p) * grad;
    const Eigen::VectorXd b = wn_drift(th, p, k);
    CHECK((b - fd).cwiseAbs().maxCoeff() < 1e-5);

    // The generic Langevin path with the analytic gradient.
    const auto field = langevin_drift(
        [&](const TorusPoint& x) { return wn_log_density_gradient(x, p.mu(), s, k); }, diffusion_matrix(p));
    CHECK((field(th) - b).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((wn_drift_field(p, k)(th) - b).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("wn_drift Jacobian matches finite differences") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  const WindingTruncation k(3);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_params(gen);
    const TorusPoint th(ang(gen), ang(gen));
    const Eigen::MatrixXd j = wn_drift_jacobian(th, p, k);
    Eigen::Matrix2d fd;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d up(th[0], th[1]), dn(th[0], th[1]);
      up[c] += h;
      dn[c] -= h;
      fd.col(c) = (wn_drift(wrap(Eigen::VectorXd(up)), p, k) - wn_drift(wrap(Eigen::VectorXd(dn)), p, k)) / (2 * h);
    }
    CHECK((j - fd).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + fd.cwiseAbs().maxCoeff()));
  }
  // At mu with tight concentration the Jacobian is -A.
  const auto c = WnParams::toroidal(1.5, 1.0, 0.2, TorusPoint(0.0, 0.0), 0.3, 0.3);
  CHECK(rel_err(wn_drift_jacobian(c.mu(), c, k), -build_drift_matrix(c)) < 1e-10);
}

TEST_CASE("von Mises drift") {
  CHECK(vm_drift(TorusPoint(0.7), 2.0, 0.7) == 0.0);
  CHECK(vm_drift(TorusPoint(0.7 - kPi / 2), 5.0, 0.7) == doctest::Approx(5.0));
  CHECK(std::abs(vm_drift(TorusPoint(0.7 + kPi), 5.0, 0.7)) < 1e-14);
  CHECK_THROWS_AS(vm_drift(TorusPoint(0.0), 0.0, 0.0), ConstraintViolation);

  // Langevin drift of vM(mu, kappa = 2 alpha / sigma^2).
  const double alpha = 1.3, mu = -0.4, sigma = 0.8;
  const double kappa = 2 * alpha / (sigma * sigma);
  const auto field = langevin_drift(
      [&](const TorusPoint& x) { return Eigen::VectorXd::Constant(1, kappa * std::sin(mu - x[0])); },
      Eigen::MatrixXd::Constant(1, 1, sigma * sigma));
  const auto vm = vm_drift_field(alpha, mu);
  CHECK(vm.family() == DriftField::Family::von_mises);
  for (double th = -3.1; th < 3.1; th += 0.1) {
    CHECK(std::abs(field(TorusPoint(th))[0] - vm_drift(TorusPoint(th), alpha, mu)) < 1e-10);
    CHECK(std::abs(vm(TorusPoint(th))[0] - vm_drift(TorusPoint(th), alpha, mu)) < 1e-15);
  }

  const auto zero = langevin_drift([](const TorusPoint&) { return Eigen::VectorXd::Zero(2); }, Eigen::Matrix2d::Identity());
  CHECK(zero(TorusPoint(1.0, 2.0)).norm() == 0.0);
}
