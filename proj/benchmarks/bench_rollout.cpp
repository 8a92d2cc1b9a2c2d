#include <benchmark/benchmark.h>

#include "city_fixture.hpp"
#include "etaxi/fleet_sim.hpp"

using namespace etaxi;

namespace {

const Solution& city_solution() {
  static const Solution sol = solve_backward(bench::city_instance(5, 240), {1});
  return sol;
}

}  // namespace

static void BM_RolloutSingle(benchmark::State& state) {
  const auto& sol = city_solution();
  const StartState start{0, 0, sol.instance().n_bins - 1};
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rollout_single(sol, start, seed++).net_revenue);
}
BENCHMARK(BM_RolloutSingle);

static void BM_RolloutFleet(benchmark::State& state) {
  const auto& sol = city_solution();
  FleetConfig cfg;
  cfg.n_taxis = static_cast<std::size_t>(state.range(0));
  cfg.start = {0, 0, sol.instance().n_bins - 1};
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(sol.instance().n_nodes); ++i) {
    cfg.start_pool.push_back({i, 0, sol.instance().n_bins - 1});
  }
  cfg.capacity.assign(sol.instance().n_nodes, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rollout_fleet(sol, cfg).blocked_stalls);
    ++cfg.seed;
  }
}
BENCHMARK(BM_RolloutFleet)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
