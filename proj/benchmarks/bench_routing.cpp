#include <benchmark/benchmark.h>

#include "etaxi/road_network.hpp"
#include "test_graphs.hpp"

using namespace etaxi;

static void BM_DistanceTree(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto g = etaxi::testing::grid_graph(side, side, 0.2);
  NodeIndex target = 0;
  for (auto _ : state) {
    DistanceTree tree(g, target);
    benchmark::DoNotOptimize(tree.distance_from(0));
    target = (target + 7) % g.size();
  }
  state.SetComplexityN(static_cast<long>(g.size()));
}
BENCHMARK(BM_DistanceTree)->RangeMultiplier(2)->Range(16, 128)->Complexity();

static void BM_ShortestPath(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto g = etaxi::testing::grid_graph(side, side, 0.2);
  const NodeIndex far = static_cast<NodeIndex>(g.size() - 1);
  for (auto _ : state) benchmark::DoNotOptimize(shortest_path(g, 0, far).km);
}
BENCHMARK(BM_ShortestPath)->Arg(32)->Arg(64);

static void BM_Snap(benchmark::State& state) {
  const auto g = etaxi::testing::grid_graph(64, 64, 0.2);
  const LatLon p = offset_km(etaxi::testing::kOrigin, 5.03, 7.41);
  for (auto _ : state) benchmark::DoNotOptimize(g.snap(p, 0.5));
}
BENCHMARK(BM_Snap);
