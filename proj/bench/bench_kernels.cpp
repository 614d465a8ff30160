#include <benchmark/benchmark.h>

#include <vector>

#include "tordiff/exec.hpp"
#include "tordiff/experiments.hpp"
#include "tordiff/fokker_planck.hpp"
#include "tordiff/inference.hpp"

using namespace tordiff;

namespace {

const WnParams kParams = WnParams::toroidal(1.0, 1.0, 0.5, TorusPoint(kPi / 2.0, -kPi / 2.0), 1.0, 1.0);

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

const Trajectory& path() {
  static const Trajectory traj = simulate_euler(kParams, TorusPoint(0.0, 0.0), 0.2, 2000, 200, 11);
  return traj;
}

void BM_Loglik(benchmark::State& state) {
  FitConfig cfg;
  cfg.kind = static_cast<TpdKind>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(loglik(path(), kParams, cfg, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(path().transitions()));
}

void BM_TpdGrid(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        tpd_grid(TpdKind::wou, kParams, TorusPoint(1.0, -1.0), 0.5, default_truncation(kParams), 240, 240, exec_of(state)));
}

void BM_SolveFpe(benchmark::State& state) {
  FpeConfig cfg;
  cfg.mx = cfg.my = 120;
  cfg.mt_per_unit = 500;
  for (auto _ : state) benchmark::DoNotOptimize(solve_fpe(kParams, TorusPoint(1.0, -1.0), 0.5, cfg, exec_of(state)));
}

void BM_ReExperiment(benchmark::State& state) {
  Scenario s;
  s.params = kParams;
  s.deltas = {0.2};
  s.n_obs = 100;
  s.replicates = 4;
  for (auto _ : state) benchmark::DoNotOptimize(run_re_experiment(s, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_Loglik)->ArgNames({"parallel", "kind"})->ArgsProduct({{0, 1}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TpdGrid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveFpe)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReExperiment)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
