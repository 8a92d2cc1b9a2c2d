#include <benchmark/benchmark.h>

#include "city_fixture.hpp"

using namespace etaxi;

static void BM_SolveBackward(benchmark::State& state) {
  const auto inst = bench::city_instance(static_cast<int>(state.range(0)), 60);
  for (auto _ : state) {
    auto sol = solve_backward(inst, {1});
    benchmark::DoNotOptimize(sol.values().data());
  }
  const double states =
      static_cast<double>(inst->horizon) * inst->n_nodes * static_cast<double>(inst->n_bins);
  state.counters["states/s"] = benchmark::Counter(states, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SolveBackward)->Arg(4)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_CompileInstance(benchmark::State& state) {
  for (auto _ : state) {
    auto inst = bench::city_instance(static_cast<int>(state.range(0)), 60);
    benchmark::DoNotOptimize(inst.get());
  }
}
BENCHMARK(BM_CompileInstance)->Arg(5)->Unit(benchmark::kMillisecond);
