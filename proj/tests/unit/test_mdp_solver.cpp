#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brute_force.hpp"
#include "etaxi/mdp_solver.hpp"
#include "micro_instances.hpp"
#include "test_graphs.hpp"

using namespace etaxi;
using etaxi::testing::BruteForce;
using etaxi::testing::random_micro_instance;

namespace {

/// Two nodes, one-minute steps, one parameter slot, unlimited battery bins
/// large enough that feasibility never binds unless a test says so.
MdpInstance two_node(int horizon) {
  MdpInstance m;
  m.horizon = horizon;
  m.n_nodes = 2;
  m.n_slots = 1;
  m.slot_minutes = 1000000;
  m.n_bins = 11;
  m.bin_kwh = 0.5;
  m.battery_low_kwh = 1.0;
  m.tau_set = {0, 30};
  m.charge_rate_kw = 6.6;
  m.usd_per_kwh = 0.2;
  m.allocate();
  m.node_ids = {10, 20};
  m.targets = {{0, 1}, {0, 1}};
  m.station_of = {0, 0};
  for (NodeIndex i = 0; i < 2; ++i) {
    for (NodeIndex j = 0; j < 2; ++j) {
      const auto p = m.pair(0, i, j);
      m.travel_min[p] = i == j ? 0 : 2;
      m.energy_kwh[p] = i == j ? 0.0 : 0.5;
      m.distance_km[p] = i == j ? 0.0 : 1.0;
      m.gross_fare[p] = 8.30;
      m.from_station_min[p] = 1;
      m.from_station_kwh[p] = 0.3;
    }
  }
  m.to_station_min = {1, 1};
  m.to_station_kwh = {0.2, 0.2};
  return m;
}

std::shared_ptr<const MdpInstance> share(MdpInstance m) {
  return std::make_shared<const MdpInstance>(std::move(m));
}

}  // namespace

TEST(ActionDuration, Cases) {
  auto m = two_node(10);
  m.travel_min[m.pair(0, 0, 1)] = 7;
  m.to_station_min = {5, 5};
  m.from_station_min[m.pair(0, 0, 1)] = 7;
  const MdpModel model(share(m));
  EXPECT_EQ(action_duration(model, 0, 0, {1, 0}), 7);
  EXPECT_EQ(action_duration(model, 0, 0, {1, 30}), 42);
  EXPECT_EQ(action_duration(model, 0, 0, {0, 0}), 1);
}

TEST(ActionDuration, NoPathIsInfeasible) {
  auto m = two_node(10);
  m.travel_min[m.pair(0, 0, 1)] = -1;
  m.energy_kwh[m.pair(0, 0, 1)] = kInf;
  const MdpModel model(share(m));
  EXPECT_THROW(action_duration(model, 0, 0, {1, 0}), InfeasibleError);
}

TEST(ReachableMass, Cases) {
  auto m = two_node(10);
  m.dest[0] = {{0, 0.6}, {1, 0.4}};
  m.energy_kwh[m.pair(0, 0, 1)] = 3.0;  // six bins
  const MdpModel model(share(m));
  EXPECT_DOUBLE_EQ(reachable_mass(model, 0, 0, 10), 1.0);
  EXPECT_DOUBLE_EQ(reachable_mass(model, 0, 0, 5), 0.6);
  // Bin 0 is B_low: only the zero-energy destination (staying put) is feasible,
  // and even that needs the reserve to the station.
  EXPECT_DOUBLE_EQ(reachable_mass(model, 0, 0, 0), 0.0);
}

TEST(ActionValue, PureRoamingCostWithoutDemand) {
  const auto sol = solve_backward(share(two_node(1)));
  EXPECT_NEAR(sol.action_value(0, 0, 10, {1, 0}), -0.10, 1e-12);
  EXPECT_EQ(sol.action_value(0, 0, 10, {0, 0}), 0.0);
  EXPECT_EQ(sol.value(0, 0, 10), 0.0);
}

TEST(ActionValue, SingleDestinationHandEvaluation) {
  // Move 0 -> 1 (U^a = 0.10), sure pick-up at 1 to 0 with F = 8.30 - 1.2 * 0.2.
  auto m = two_node(3);
  m.energy_kwh[m.pair(0, 1, 0)] = 1.2;
  m.pickup_prob[1] = 1.0;
  m.dest[1] = {{0, 1.0}};
  const auto sol = solve_backward(share(m));
  EXPECT_NEAR(sol.action_value(0, 0, 10, {1, 0}), 8.06 - 0.10, 1e-12);
}

TEST(ActionValue, StrictModeSubtractsBareEnergy) {
  auto m = two_node(3);
  m.energy_kwh[m.pair(0, 1, 0)] = 1.2;
  m.pickup_prob[1] = 1.0;
  m.dest[1] = {{0, 1.0}};
  m.unpriced_trip_energy = true;
  const auto sol = solve_backward(share(m));
  EXPECT_NEAR(sol.action_value(0, 0, 10, {1, 0}), 8.06 - 1.2 - 0.10, 1e-12);
}

TEST(ActionValue, ChargingActionCostsBothLegsAndPurchase) {
  const auto sol = solve_backward(share(two_node(100)));
  // Legs 0.2 + 0.3 kWh, 30 min at 6.6 kW = 3.3 kWh: (0.5 + 3.3) * 0.2.
  EXPECT_NEAR(sol.action_value(0, 0, 4, {1, 30}), -0.76, 1e-12);
  const auto tr = sol.model().transition(0, 0, 4, 1, 1);
  ASSERT_TRUE(tr.feasible);
  EXPECT_EQ(tr.arrive_t, 32);
  EXPECT_EQ(tr.bin_after_charge, 4 - 1 + 6);  // 0.2 kWh -> 1 bin used, 3.3 kWh -> 6 bins gained
  EXPECT_EQ(tr.arrive_bin, 9 - 1);
}

TEST(ActionValue, BatteryFloorMakesActionInfeasible) {
  const auto sol = solve_backward(share(two_node(10)));
  // Bin 1 = 1.5 kWh: the move uses one bin, arriving at B_low without the reserve.
  EXPECT_EQ(sol.action_value(0, 0, 1, {1, 0}), Solution::kDead);
  EXPECT_GT(sol.action_value(0, 0, 2, {1, 0}), Solution::kDead);
}

TEST(Solve, ZeroHorizon) {
  const auto sol = solve_backward(share(two_node(0)));
  EXPECT_TRUE(sol.values().empty());
  EXPECT_EQ(sol.value(0, 0, 3), 0.0);
  EXPECT_FALSE(sol.best_action(0, 0, 3));
  EXPECT_TRUE(sol.best_actions(0, 0, 3).empty());
}

TEST(Solve, DeadStatesHaveNoActions) {
  auto m = two_node(5);
  m.station_of = {-1, -1};
  const auto sol = solve_backward(share(m));
  EXPECT_TRUE(sol.dead(0, 0, 5));
  EXPECT_FALSE(sol.best_action(0, 0, 5));
  EXPECT_TRUE(sol.best_actions(0, 0, 5, 3).empty());
}

TEST(Solve, TieBreakPrefersLowerNodeThenShorterCharge) {
  // No demand and free energy: every feasible action is worth 0.
  auto m = two_node(4);
  m.usd_per_kwh = 0.0;
  const auto sol = solve_backward(share(m));
  EXPECT_EQ(*sol.best_action(0, 1, 8), (ActionRef{0, 0}));
  EXPECT_EQ(*sol.second_action(0, 1, 8), (ActionRef{0, 30}));
  const auto ranked = sol.best_actions(0, 1, 8);
  ASSERT_EQ(ranked.size(), 4u);
  EXPECT_EQ(ranked[2].action, (ActionRef{1, 0}));
  EXPECT_EQ(ranked[3].action, (ActionRef{1, 30}));
}

TEST(Solve, BestActionsOrderedByValue) {
  auto m = two_node(4);
  m.pickup_prob[1] = 0.5;
  m.dest[1] = {{0, 1.0}};
  const auto sol = solve_backward(share(m));
  const auto one = sol.best_actions(0, 0, 10, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].action, *sol.best_action(0, 0, 10));
  const auto all = sol.best_actions(0, 0, 10, 100);
  EXPECT_EQ(all.size(), 4u);
  for (std::size_t k = 1; k < all.size(); ++k) EXPECT_GE(all[k - 1].value, all[k].value);
  const auto two = sol.best_actions(0, 0, 10, 2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].value, sol.action_value(0, 0, 10, two[0].action), 0.0);
  EXPECT_EQ(two[1].action, *sol.second_action(0, 0, 10));
}

TEST(Solve, MatchesBruteForceOnTwoNodeThreeSlotInstance) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto m = random_micro_instance(seed);
    if (m.n_nodes != 2) continue;
    m.horizon = 3;
    const auto sol = solve_backward(share(m));
    BruteForce bf(m);
    for (NodeIndex i = 0; i < 2; ++i) {
      for (int b = 0; b < m.n_bins; ++b) EXPECT_NEAR(sol.value(0, i, b), bf.value(0, i, b), 1e-9);
    }
    return;
  }
  FAIL() << "no two-node instance generated";
}

TEST(Solve, MatchesBruteForceOnRandomMicroInstances) {
  for (std::uint64_t seed = 100; seed < 300; ++seed) {
    const auto m = random_micro_instance(seed);
    const auto sol = solve_backward(share(m));
    BruteForce bf(m);
    for (int t = 0; t < m.horizon; ++t) {
      for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
        for (int b = 0; b < m.n_bins; ++b) {
          const double want = bf.value(t, i, b);
          const double got = sol.value(t, i, b);
          if (std::isinf(want)) EXPECT_EQ(got, want) << "seed " << seed;
          else EXPECT_NEAR(got, want, 1e-9) << "seed " << seed;
        }
      }
    }
  }
}

TEST(Solve, IceModeAgainstItsOwnBruteForce) {
  for (std::uint64_t seed = 300; seed < 340; ++seed) {
    auto m = random_micro_instance(seed);
    m.battery_limited = false;
    m.n_bins = 1;
    m.tau_set = {0};
    m.usd_per_kwh = 2.5 / 33.7;
    const auto sol = solve_backward(share(m));
    BruteForce bf(m);
    for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
      EXPECT_NEAR(sol.value(0, i, 0), bf.value(0, i, 0), 1e-9);
    }
  }
}

TEST(Solve, BellmanConsistencyAndStoredActionsFeasible) {
  for (std::uint64_t seed = 500; seed < 540; ++seed) {
    const auto m = random_micro_instance(seed);
    const auto sol = solve_backward(share(m));
    for (int t = 0; t < m.horizon; ++t) {
      for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
        for (int b = 0; b < m.n_bins; ++b) {
          const auto ranked = sol.best_actions(t, i, b);
          if (ranked.empty()) {
            EXPECT_TRUE(sol.dead(t, i, b));
            continue;
          }
          EXPECT_EQ(ranked.front().value, sol.value(t, i, b));
          const auto best = *sol.best_action(t, i, b);
          EXPECT_EQ(best, ranked.front().action);
          const auto tr =
              sol.model().transition(t, i, b, best.target, sol.model().tau_index(best.tau_min));
          ASSERT_TRUE(tr.feasible);
          EXPECT_GE(tr.arrive_bin, sol.model().reserve_bins(tr.arrive_t, best.target));
        }
      }
    }
  }
}

TEST(Solve, PositiveHomogeneity) {
  for (std::uint64_t seed = 600; seed < 620; ++seed) {
    auto m = random_micro_instance(seed);
    m.unpriced_trip_energy = false;
    auto scaled = m;
    const double c = 2.5;
    for (auto& f : scaled.gross_fare) f *= c;
    scaled.usd_per_kwh *= c;
    const auto a = solve_backward(share(m));
    const auto b = solve_backward(share(scaled));
    for (std::size_t k = 0; k < a.values().size(); ++k) {
      if (std::isinf(a.values()[k])) EXPECT_EQ(b.values()[k], a.values()[k]);
      else EXPECT_NEAR(b.values()[k], c * a.values()[k], 1e-9);
    }
    EXPECT_EQ(a.best_codes(), b.best_codes());
  }
}

TEST(Solve, DeterministicAcrossThreadCounts) {
  const auto m = share(random_micro_instance(77));
  const auto a = solve_backward(m, {1});
  const auto b = solve_backward(m, {4});
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(a.best_codes(), b.best_codes());
  EXPECT_EQ(a.second_codes(), b.second_codes());
}

TEST(Solve, RebuildFromStoredValues) {
  const auto m = share(random_micro_instance(91));
  const auto a = solve_backward(m);
  const auto b = solution_from_values(m, a.values());
  EXPECT_EQ(a.best_codes(), b.best_codes());
  EXPECT_EQ(a.second_codes(), b.second_codes());
}

TEST(Instance, ValidationCatchesBadTables) {
  auto m = two_node(3);
  m.pickup_prob[0] = 1.5;
  EXPECT_THROW(m.validate(), DataError);
  m = two_node(3);
  m.targets[0] = {1, 0};
  EXPECT_THROW(m.validate(), DataError);
  m = two_node(3);
  m.tau_set = {10};
  EXPECT_THROW(m.validate(), DataError);
}

TEST(Binning, PessimisticRounding) {
  const auto m = two_node(1);
  EXPECT_EQ(m.consume_bins(0.5), 1);
  EXPECT_EQ(m.consume_bins(0.51), 2);
  EXPECT_EQ(m.consume_bins(0.0), 0);
  EXPECT_EQ(m.consume_bins(kInf), MdpInstance::kNeverBins);
  EXPECT_EQ(m.charge_bins(30), 6);  // 3.3 kWh / 0.5
  EXPECT_EQ(m.bin_of_level(3.9), 5);
}

TEST(Compile, GridCityTablesAreConsistent) {
  const auto g = etaxi::testing::grid_graph(3, 3, 1.0);
  SpeedNetwork net(g, {30.0, 110.0});
  StationTable st(g, {{"S", g.junction(4).pos, 4, true, true}});
  DemandModel d;
  d.n_junctions = g.size();
  d.pickup_prob.assign(24 * g.size(), 0.0);
  d.pickup_count.assign(24 * g.size(), 0.0);
  d.competitor_count.assign(24 * g.size(), 0.0);
  d.dest.assign(24 * g.size(), {});
  d.pickups_total.assign(g.size(), 0);
  for (NodeIndex i = 0; i < g.size(); ++i) d.pickups_total[i] = 10 + i;
  d.pickup_prob[d.cell(9, 8)] = 0.5;
  d.dest[d.cell(9, 8)] = {{0, 0.25, 1}, {1, 0.75, 3}};
  ModelInputs in{&net, &st, &d, {}, {}, ChargingSpec::of(ChargeMode::Mode3), {}, {}};
  SolverConfig cfg;
  cfg.aggregation_k = 4;
  cfg.horizon_min = 30;
  cfg.start_clock_min = 9 * 60;
  const auto m = compile_instance(in, cfg);
  EXPECT_EQ(m.n_nodes, 4);
  EXPECT_EQ(m.node_ids, (std::vector<JunctionId>{6, 7, 8, 9}));
  EXPECT_EQ(m.n_bins, 91);
  EXPECT_NEAR(m.bin_kwh, 0.3, 1e-12);
  // Node 3 is junction index 8 (the top-right corner); node 0 is index 5.
  const int s = 9;
  EXPECT_EQ(m.pickup_prob[m.node(s, 3)], 0.5);
  // Junction index 0 maps to node 1 (index 6) and index 1 to node 0 (index 5).
  const auto& row = m.dest[m.node(s, 3)];
  ASSERT_EQ(row.size(), 2u);
  EXPECT_EQ(row[0].node, 0u);
  EXPECT_NEAR(row[0].prob, 0.75, 1e-12);
  EXPECT_EQ(row[1].node, 1u);
  EXPECT_NEAR(row[1].prob, 0.25, 1e-12);
  // Junction 5 -> 8 is 1 km at 30 km/h: 2 minutes.
  EXPECT_EQ(m.travel_min[m.pair(s, 0, 3)], 2);
  EXPECT_NEAR(m.distance_km[m.pair(s, 0, 3)], 1.0, 1e-12);
  EXPECT_EQ(m.station_of[0], 0);
  EXPECT_EQ(m.to_station_min[m.node(s, 0)], 2);
  const auto sol = solve_backward(share(m));
  EXPECT_TRUE(std::isfinite(sol.value(0, 0, m.n_bins - 1)));
}
