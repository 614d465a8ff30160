#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tordiff/errors.hpp"
#include "tordiff/experiments.hpp"
#include "tordiff/io.hpp"

using namespace tordiff;

namespace {

using Gen = std::mt19937_64;

double unif(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

WnParams random_wn(Gen& g, int dim) {
  if (dim == 1) return WnParams::circular(unif(g, 0.1, 5.0), unif(g, -3, 3), unif(g, 0.1, 3.0));
  const double a1 = unif(g, 0.5, 3.0), a2 = unif(g, 0.5, 3.0);
  return WnParams::toroidal(a1, a2, unif(g, -0.9, 0.9) * std::sqrt(a1 * a2), TorusPoint(unif(g, -3, 3), unif(g, -3, 3)),
                            unif(g, 0.1, 3.0), unif(g, 0.1, 3.0));
}

std::vector<double> random_freqs(Gen& g, int n) {
  std::vector<double> f(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& v : f) total += v = unif(g, 0.2, 1.0);
  for (auto& v : f) v /= total;
  return f;
}

EvoModel random_model(Gen& g, int h) {
  std::vector<std::array<WnParams, 2>> angles;
  for (int i = 0; i < h; ++i) angles.push_back({random_wn(g, 2), random_wn(g, 2)});
  EvoModel m = make_model(angles, 4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) m.char_exchange(i, j) = m.char_exchange(j, i) = unif(g, 0.3, 3.0);
  for (int i = 0; i < h; ++i) {
    const auto row = random_freqs(g, h);
    for (int j = 0; j < h; ++j) m.trans(i, j) = row[static_cast<std::size_t>(j)];
    m.states[static_cast<std::size_t>(i)].gamma = unif(g, 0.1, 3.0);
    for (auto& c : m.states[static_cast<std::size_t>(i)].classes) {
      c.char_freqs = random_freqs(g, 4);
      c.ss_freqs = random_freqs(g, 3);
    }
  }
  const auto init = random_freqs(g, h);
  for (int i = 0; i < h; ++i) m.init[i] = init[static_cast<std::size_t>(i)];
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("format_double is the shortest exact round trip") {
  Gen g(3);
  for (int k = 0; k < 2000; ++k) {
    const double x = std::ldexp(unif(g, -1.0, 1.0), static_cast<int>(unif(g, -300, 300)));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("trajectory CSV round trips exactly") {
  Gen g(5);
  for (int dim : {1, 2}) {
    const WnParams p = random_wn(g, dim);
    Rng rng(11);
    const Trajectory traj = simulate_euler(p, sample_stationary(p, rng), 0.37, 40, 7, rng);
    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    CHECK(ss.str().rfind("# tordiff-v1\n", 0) == 0);
    CHECK(read_trajectory_csv(ss) == traj);
  }
}

TEST_CASE("trajectory CSV rejects malformed input") {
  const auto bad = [](const std::string& text) {
    std::istringstream is(text);
    CHECK_THROWS_AS(read_trajectory_csv(is), ConfigError);
  };
  bad("index,time,theta1\n0,0,1\n");
  bad("# tordiff-v1\n# delta=1\nindex,time,theta1\n0,0,x\n");
  bad("# tordiff-v1\n# delta=-1\nindex,time,theta1\n0,0,1\n1,1,1\n");
  bad("# tordiff-v1\n# delta=1\nindex,time,theta1\n0,0,1\n2,1,1\n");
  bad("# tordiff-v1\n# delta=1\nindex,time,theta1,theta2\n0,0,1\n");
  // Windows line endings are accepted.
  std::istringstream crlf("# tordiff-v1\r\n# delta=0.5\r\nindex,time,theta1\r\n0,0,1\r\n1,0.5,2\r\n");
  const Trajectory t = read_trajectory_csv(crlf);
  CHECK(t.points.size() == 2);
  CHECK(t.delta == 0.5);
}

TEST_CASE("grid CSV round trips exactly") {
  Gen g(8);
  for (int dim : {1, 2}) {
    const WnParams p = random_wn(g, dim);
    const TorusPoint from = dim == 1 ? TorusPoint(0.3) : TorusPoint(0.3, -2.0);
    const GridDensity grid = tpd_grid(TpdKind::wou, p, from, 0.7, default_truncation(p), 24, dim == 1 ? 1 : 20);
    std::stringstream ss;
    write_grid_csv(ss, grid);
    CHECK(read_grid_csv(ss) == grid);
  }
  std::istringstream bad("# tordiff-v1\n# p=1,mx=3,my=1\ni,theta1,density\n0,0,1\n1,0,1\n");
  CHECK_THROWS_AS(read_grid_csv(bad), ConfigError);
}

TEST_CASE("WN parameter and fit result JSON round trip") {
  Gen g(13);
  for (int k = 0; k < 20; ++k) {
    const WnParams p = random_wn(g, 1 + k % 2);
    CHECK(wn_params_from_json(wn_params_to_json(p)) == p);
    FitResult f{p, unif(g, -1e4, 1e4), k % 3 != 0, 17 + k};
    CHECK(fit_result_from_json(fit_result_to_json(f)) == f);
  }
  CHECK_THROWS_AS(wn_params_from_json("{"), ConfigError);
  CHECK_THROWS_AS(wn_params_from_json(R"({"dim":2,"alpha":[1,1],"mu":[0,0],"sigma":[1,1]})"), ConfigError);
  CHECK_THROWS(wn_params_from_json(R"({"dim":1,"alpha":[-1],"mu":[0],"sigma":[1]})"));
}

TEST_CASE("scenario JSON round trips") {
  Gen g(17);
  for (int k = 0; k < 10; ++k) {
    Scenario s;
    s.name = "case" + std::to_string(k);
    s.params = random_wn(g, 1 + k % 2);
    s.deltas = {0.05, 0.2 * (k + 1)};
    s.n_obs = 50 + k;
    s.replicates = 1 + k;
    s.kinds = k % 2 ? std::vector<TpdKind>{TpdKind::wou, TpdKind::euler} : std::vector<TpdKind>{TpdKind::shoji_ozaki};
    s.seed = 0xfeedbeefULL * static_cast<std::uint64_t>(k + 1);
    CHECK(scenario_from_json(scenario_to_json(s)) == s);
  }
  Scenario bad;
  bad.replicates = 0;
  CHECK_THROWS_AS(scenario_from_json(scenario_to_json(bad)), ConfigError);
  bad.replicates = 1;
  bad.deltas = {0.0005};
  CHECK_THROWS_AS(scenario_from_json(scenario_to_json(bad)), ConfigError);
  bad.deltas = {};
  CHECK_THROWS_AS(scenario_from_json(scenario_to_json(bad)), ConfigError);
}

TEST_CASE("evolution model JSON round trips") {
  Gen g(19);
  for (int h : {1, 2, 4}) {
    const EvoModel m = random_model(g, h);
    CHECK(evo_model_from_json(evo_model_to_json(m)) == m);
  }
  CHECK_THROWS_AS(evo_model_from_json(R"({"schema":"other"})"), ConfigError);
  EvoModel m = random_model(g, 2);
  m.trans(0, 0) += 0.5;
  CHECK_THROWS(evo_model_from_json(evo_model_to_json(m)));
}

TEST_CASE("aligned pair datasets round trip with nulls") {
  Gen g(23);
  const EvoModel m = random_model(g, 2);
  std::vector<AlignedPairData> pairs;
  for (int k = 0; k < 5; ++k) {
    AlignedPairData d = simulate_pair(m, 12, 0.8, static_cast<std::uint64_t>(k)).data;
    d.sites[1].char_a.reset();
    d.sites[2].x_b.reset();
    d.sites[3].ss_a.reset();
    d.sites[3].ss_b.reset();
    pairs.push_back(d);
  }
  std::stringstream ss;
  write_pair_dataset(ss, pairs);
  ss << "\n";
  CHECK(read_pair_dataset(ss) == pairs);
  CHECK(pair_from_json_line(pair_to_json_line(pairs[0])) == pairs[0]);
  CHECK_THROWS_AS(pair_from_json_line(R"({"sites":[{"char_a":-9}]})"), ConfigError);
  CHECK_THROWS_AS(pair_from_json_line("not json"), ConfigError);
}
