// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <utility>
#include <vector>

#include "moelever/fit.hpp"
#include "moelever/flops.hpp"
#include "moelever/laws.hpp"
#include "moelever/planner.hpp"
#include "support/reference_configs.hpp"

using namespace moelever;

static void BM_ElJoint(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(el_joint(0.031, 12.0, 1e22));
}
BENCHMARK(BM_ElJoint);

static void BM_OptimalGranularity(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(optimal_granularity());
}
BENCHMARK(BM_OptimalGranularity);

static void BM_ParamCounts(benchmark::State& state) {
  const MoEArchitecture arch = testing::ling_mini_beta();
  for (auto _ : state) benchmark::DoNotOptimize(param_counts(arch));
}
BENCHMARK(BM_ParamCounts);

static void BM_ForwardFlops(benchmark::State& state) {
  const MoEArchitecture arch = testing::ling_mini_beta();
  for (auto _ : state) benchmark::DoNotOptimize(forward_flops(arch, 1.0, 8192.0));
}
BENCHMARK(BM_ForwardFlops);

static void BM_HeatmapGrid(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(heatmap_grid(1e22, 0.008, 1.0, 1.0, 16.0, steps));
  state.SetItemsProcessed(state.iterations() * steps * steps);
}
BENCHMARK(BM_HeatmapGrid)->Arg(16)->Arg(64)->Arg(256);

static void BM_FitPowerLaw(benchmark::State& state) {
  const PowerLaw truth = default_alloc_M(ModelFamily::dense);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 20; ++i) {
    const double x = 1e18 * std::pow(1e3, i / 19.0);
    pts.emplace_back(x, truth(x));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_power_law(pts));
}
BENCHMARK(BM_FitPowerLaw);

static void BM_PlanArchitecture(benchmark::State& state) {
  PlanRequest req;
  req.C = 1e22;
  req.a_min = 0.031;
  req.g_max = 16.0;
  for (auto _ : state) benchmark::DoNotOptimize(plan_architecture(req));
}
BENCHMARK(BM_PlanArchitecture);

BENCHMARK_MAIN();
