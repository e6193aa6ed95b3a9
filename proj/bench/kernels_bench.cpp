// Serial reference kernels against their OpenMP versions on one full-sized
// window: r = 120 steps, m scenarios.
#include <benchmark/benchmark.h>

#include <omp.h>

#include <vector>

#include "storopt/experiments.hpp"
#include "storopt/kernels.hpp"

using namespace storopt;

namespace {

struct Window {
  ChainLpInstance inst;
  std::vector<double> realized;
};

const Window& window() {
  static const Window w = [] {
    const SystemInputs sys = make_synthetic_system(240, 7);
    Window out;
    const std::size_t r = 120;
    out.inst.retention = sys.instance.retention;
    out.inst.costs.assign(sys.prices.begin(), sys.prices.begin() + r);
    out.inst.lower.assign(sys.instance.lower.begin(), sys.instance.lower.begin() + r);
    out.inst.upper.assign(sys.instance.upper.begin(), sys.instance.upper.begin() + r);
    out.inst.charge_cap.assign(sys.instance.charge_cap.begin(), sys.instance.charge_cap.begin() + r);
    out.realized = out.inst.costs;
    return out;
  }();
  return w;
}

void BM_FirstStepsSerial(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const OuScenarioSource src(OuParams{}, 1.0, m, 3);
  std::vector<double> first(m);
  for (auto _ : state) {
    kernels::scenario_first_steps_serial(window().inst, src, 0, window().realized, first);
    benchmark::DoNotOptimize(first.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

void BM_FirstStepsOmp(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  const OuScenarioSource src(OuParams{}, 1.0, m, 3);
  std::vector<double> first(m);
  for (auto _ : state) {
    kernels::scenario_first_steps_omp(window().inst, src, 0, window().realized, first, threads);
    benchmark::DoNotOptimize(first.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

void BM_FillSerial(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const OuScenarioSource src(OuParams{}, 1.0, m, 3);
  PriceScenarioSet set{m, 120, std::vector<double>(m * 120)};
  for (auto _ : state) {
    kernels::fill_scenarios_serial(src, 0, window().realized, set);
    benchmark::DoNotOptimize(set.costs.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

void BM_FillOmp(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  const OuScenarioSource src(OuParams{}, 1.0, m, 3);
  PriceScenarioSet set{m, 120, std::vector<double>(m * 120)};
  for (auto _ : state) {
    kernels::fill_scenarios_omp(src, 0, window().realized, set, threads);
    benchmark::DoNotOptimize(set.costs.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}

void thread_args(benchmark::internal::Benchmark* b) {
  const int most = omp_get_max_threads();
  for (int m : {100, 1000}) {
    for (int t = 1; t <= most; t *= 2) b->Args({m, t});
    if ((most & (most - 1)) != 0) b->Args({m, most});
  }
}

}  // namespace

BENCHMARK(BM_FirstStepsSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FirstStepsOmp)->Apply(thread_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FillSerial)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FillOmp)->Apply(thread_args)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
