#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tordiff/errors.hpp"
#include "tordiff/exec.hpp"
#include "tordiff/experiments.hpp"
#include "tordiff/inference.hpp"

using namespace tordiff;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.name = "small";
  s.params = WnParams::toroidal(1.0, 1.0, 0.5, TorusPoint(kPi / 2.0, -kPi / 2.0), 1.0, 1.0);
  s.deltas = {0.2, 0.5};
  s.n_obs = 60;
  s.replicates = 4;
  s.seed = 99;
  return s;
}

std::string csv_of(const ReTable& t) {
  std::ostringstream os;
  write_re_table_csv(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("best_kind takes the minimum and breaks ties by name") {
  const std::vector<TpdKind> kinds{TpdKind::wou, TpdKind::shoji_ozaki, TpdKind::euler};
  CHECK(best_kind(kinds, std::vector<double>{1.0, 2.0, 3.0}) == 0);
  CHECK(best_kind(kinds, std::vector<double>{3.0, 2.0, 1.0}) == 2);
  // "E" < "SO" < "WOU"
  CHECK(best_kind(kinds, std::vector<double>{1.0, 1.0, 1.0}) == 2);
  CHECK(best_kind(kinds, std::vector<double>{1.0, 1.0, 2.0}) == 1);
  CHECK(best_kind(kinds, std::vector<double>{0.5, 1.0, INFINITY}) == 0);
  CHECK_THROWS_AS(best_kind(kinds, std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("RE table obeys the definition and recomputes from its MSEs") {
  const Scenario s = small_scenario();
  const ReTable t = run_re_experiment(s);
  REQUIRE(t.components == re_components(2));
  REQUIRE(t.cells.size() == s.deltas.size() * s.kinds.size());
  for (double d : s.deltas)
    for (std::size_t c = 0; c < t.components.size(); ++c) {
      std::vector<double> mse;
      int winners = 0;
      for (TpdKind k : s.kinds) {
        const ReCell& cell = t.cell(s.name, d, k);
        mse.push_back(cell.mse[c]);
        winners += cell.best[c];
      }
      CHECK(winners == 1);
      const std::size_t b = best_kind(s.kinds, mse);
      CHECK(t.cell(s.name, d, s.kinds[b]).best[c]);
      for (std::size_t k = 0; k < s.kinds.size(); ++k) {
        const ReCell& cell = t.cell(s.name, d, s.kinds[k]);
        CHECK(cell.re[c] == doctest::Approx(k == b ? 1.0 : mse[b] / mse[k]).epsilon(1e-15));
        CHECK(cell.re[c] > 0.0);
        CHECK(cell.re[c] <= 1.0);
      }
    }
  for (const auto& cell : t.cells) {
    double mean = 0.0;
    for (double r : cell.re) mean += r / static_cast<double>(cell.re.size());
    CHECK(cell.re_mean == doctest::Approx(mean).epsilon(1e-15));
    CHECK(cell.re_mean > 0.0);
    CHECK(cell.re_mean <= 1.0);
  }
}

TEST_CASE("MSEs match fits made by hand on the same simulated paths") {
  Scenario s = small_scenario();
  s.deltas = {0.2};
  s.kinds = {TpdKind::wou};
  s.replicates = 2;
  const ReTable t = run_re_experiment(s, Exec::serial);
  std::vector<double> mse(5, 0.0);
  for (int r = 0; r < s.replicates; ++r) {
    Rng rng(Rng::derive_seed(s.seed, static_cast<std::uint64_t>(r)));
    const TorusPoint start = sample_stationary(s.params, rng);
    const Trajectory path = simulate_euler(s.params, start, 0.2, static_cast<std::size_t>(s.n_obs), 200, rng,
                                           default_truncation(s.params));
    FitConfig cfg;
    cfg.kind = TpdKind::wou;
    cfg.fix_sigma = std::array<double, 2>{1.0, 1.0};
    const WnParams e = fit_mle(path, cfg).params;
    const double err[5] = {e.alpha1() - 1.0, e.alpha2() - 1.0, e.alpha3() - 0.5, wrap_angle(e.mu()[0] - kPi / 2.0),
                           wrap_angle(e.mu()[1] + kPi / 2.0)};
    for (int c = 0; c < 5; ++c) mse[static_cast<std::size_t>(c)] += err[c] * err[c] / s.replicates;
  }
  const ReCell& cell = t.cell("small", 0.2, TpdKind::wou);
  for (int c = 0; c < 5; ++c) CHECK(cell.mse[static_cast<std::size_t>(c)] == doctest::Approx(mse[static_cast<std::size_t>(c)]).epsilon(1e-12));
}

TEST_CASE("a kind evaluated alone has every RE equal to one") {
  Scenario s = small_scenario();
  s.kinds = {TpdKind::shoji_ozaki};
  s.replicates = 2;
  const ReTable t = run_re_experiment(s);
  for (const auto& cell : t.cells) {
    for (double r : cell.re) CHECK(r == 1.0);
    CHECK(cell.re_mean == 1.0);
  }
}

TEST_CASE("RE tables are reproducible across runs and thread counts") {
  Scenario s = small_scenario();
  s.replicates = 3;
  const std::string serial = csv_of(run_re_experiment(s, Exec::serial));
  set_threads(3);
  const std::string parallel = csv_of(run_re_experiment(s, Exec::parallel));
  set_threads(1);
  const std::string again = csv_of(run_re_experiment(s, Exec::parallel));
  CHECK(serial == parallel);
  CHECK(serial == again);
  s.seed += 1;
  CHECK(csv_of(run_re_experiment(s, Exec::serial)) != serial);
}

TEST_CASE("low replicate counts are flagged in the table") {
  Scenario s = small_scenario();
  s.replicates = 1;
  s.deltas = {0.2};
  const ReTable t = run_re_experiment(s);
  REQUIRE(!t.warnings.empty());
  CHECK(t.warnings[0].find("only 1 replicates") != std::string::npos);
  CHECK(csv_of(t).find("# warning: small: only 1 replicates") != std::string::npos);
}

TEST_CASE("table scenarios cover the four parameter choices") {
  const std::vector<double> deltas{0.2, 1.0};
  const auto scns = table_scenarios(deltas, 7, 5);
  REQUIRE(scns.size() == 4);
  CHECK(scns[0].name == "alpha1_sigma1");
  CHECK(scns[3].name == "alpha2_sigma2");
  CHECK(scns[3].params.alpha3() == 1.0);
  CHECK(scns[1].params.sigma1() == 2.0);
  for (const auto& s : scns) {
    CHECK(s.replicates == 7);
    CHECK(s.deltas == deltas);
    CHECK(s.params.mu()[0] == doctest::Approx(kPi / 2.0));
  }
  CHECK(scns[0].seed != scns[1].seed);
}

TEST_CASE("KL curve CSV has nonnegative divergences") {
  const WnParams p = WnParams::circular(1.0, 0.0, 1.0);
  FpeConfig cfg;
  cfg.mx = cfg.my = 64;
  cfg.mt_per_unit = 400;
  const std::vector<TpdKind> kinds{TpdKind::euler, TpdKind::wou};
  const std::vector<double> times{0.2, 1.0};
  std::ostringstream os;
  run_kl_curves(os, p, kinds, times, cfg);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "# tordiff-v1");
  std::getline(is, line);
  CHECK(line == "t,kind,divergence");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) >= 0.0);
  }
  CHECK(rows == 4);
}
