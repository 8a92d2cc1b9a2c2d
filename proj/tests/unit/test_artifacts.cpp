#include <gtest/gtest.h>

#include <sstream>

#include "etaxi/artifacts.hpp"
#include "micro_instances.hpp"
#include "test_graphs.hpp"

using namespace etaxi;

TEST(Hash, KnownVectors) {
  EXPECT_EQ(hash_hex(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hash_hex(fnv1a64("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(hash_hex(fnv1a64("foobar")), "85944171f73967e8");
  EXPECT_NE(content_hash("ab"), content_hash("ba"));
}

TEST(GraphJson, RoundTrip) {
  const auto g = etaxi::testing::grid_graph(3, 4, 0.5);
  const auto back = graph_from_json(nlohmann::json::parse(graph_to_json(g).dump()));
  ASSERT_EQ(back.size(), g.size());
  ASSERT_EQ(back.edges().size(), g.edges().size());
  for (NodeIndex i = 0; i < g.size(); ++i) {
    EXPECT_EQ(back.junction(i).id, g.junction(i).id);
    EXPECT_EQ(back.junction(i).pos.lat, g.junction(i).pos.lat);
  }
  for (std::size_t e = 0; e < g.edges().size(); ++e) EXPECT_EQ(back.edges()[e].km, g.edges()[e].km);
}

TEST(GraphJson, SchemaErrors) {
  EXPECT_THROW(graph_from_json(nlohmann::json::parse(R"({"junctions": []})")), SchemaError);
  EXPECT_THROW(
      graph_from_json(nlohmann::json::parse(
          R"({"junctions": [{"id": 1, "lat": 0, "lon": 0}], "edges": [{"from": 1, "to": 2, "km": 1}]})")),
      DataError);
}

TEST(GraphCsv, NodesAndEdges) {
  std::istringstream nodes("id,lat,lon\n2,40.0,-73.0\n1,40.001,-73.0\n");
  std::istringstream edges("from,to,km\n1,2,0.11\n2,1,0.11\n");
  const auto g = graph_from_csv(nodes, edges);
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.junction(0).id, 1);
  EXPECT_EQ(g.edges().size(), 2u);
  std::istringstream bad_nodes("id,lat\n1,40\n");
  std::istringstream no_edges("from,to,km\n");
  EXPECT_THROW(graph_from_csv(bad_nodes, no_edges), SchemaError);
}

TEST(Stations, ParseModesAndSnap) {
  const auto g = etaxi::testing::grid_graph(2, 2, 1.0);
  std::ostringstream text;
  text << "id,lat,lon,modes\n"
       << "A," << g.junction(3).pos.lat << ',' << g.junction(3).pos.lon << ",mode3;fast_dc\n"
       << "B," << g.junction(0).pos.lat << ',' << g.junction(0).pos.lon << ",mode3\n";
  std::istringstream in(text.str());
  const auto st = read_stations_csv(in, g, 0.5);
  ASSERT_EQ(st.size(), 2u);
  EXPECT_EQ(st[0].junction, 3u);
  EXPECT_TRUE(st[0].fast_dc);
  EXPECT_FALSE(st[1].fast_dc);
  std::istringstream bad("id,lat,lon,modes\nC,40.75,-73.99,warp\n");
  EXPECT_THROW(read_stations_csv(bad, g, 0.5), DataError);
  std::istringstream far("id,lat,lon,modes\nD,41.75,-73.99,mode3\n");
  EXPECT_THROW(read_stations_csv(far, g, 0.5), DataError);
}

TEST(NetworkJson, RoundTrip) {
  SpeedNetwork net(etaxi::testing::grid_graph(2, 3, 1.0), {20.0, 90.0});
  net.set_speed(1, 8, 12.5);
  std::array<double, kHoursPerDay> idle{};
  idle[8] = 0.25;
  net.set_idling_ratios(idle);
  const auto back = network_from_json(nlohmann::json::parse(network_to_json(net).dump()));
  EXPECT_EQ(back.speed_kmh(1, 8), 12.5);
  EXPECT_EQ(back.speed_kmh(0, 8), 20.0);
  EXPECT_EQ(back.idling_ratio(8), 0.25);
  EXPECT_EQ(back.config().cap_kmh, 90.0);
  EXPECT_EQ(network_to_json(back).dump(), network_to_json(net).dump());
}

TEST(ValuesCsv, RoundTripPreservesSolution) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = std::make_shared<const MdpInstance>(etaxi::testing::random_micro_instance(seed));
    const auto sol = solve_backward(inst);
    std::stringstream io;
    write_values_csv(io, sol);
    const auto values = read_values_csv(io, *inst);
    ASSERT_EQ(values.size(), sol.values().size());
    for (std::size_t k = 0; k < values.size(); ++k) EXPECT_EQ(values[k], sol.values()[k]);
    const auto rebuilt = solution_from_values(inst, values);
    EXPECT_EQ(rebuilt.best_codes(), sol.best_codes());
  }
}

TEST(ValuesCsv, ShapeMismatchIsRejected) {
  auto inst = std::make_shared<const MdpInstance>(etaxi::testing::random_micro_instance(3));
  ASSERT_GT(inst->horizon, 0);
  const auto sol = solve_backward(inst);
  std::ostringstream out;
  write_values_csv(out, sol);
  auto text = out.str();
  std::istringstream truncated(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  EXPECT_THROW(read_values_csv(truncated, *inst), DataError);
  auto other = *inst;
  other.node_ids[0] += 1000;
  std::istringstream full(text);
  EXPECT_THROW(read_values_csv(full, other), DataError);
}

TEST(InstanceHash, SensitiveToTables) {
  const auto a = etaxi::testing::random_micro_instance(5);
  auto b = a;
  EXPECT_EQ(instance_hash(a), instance_hash(b));
  b.usd_per_kwh += 1e-12;
  EXPECT_NE(instance_hash(a), instance_hash(b));
  b = a;
  b.pickup_prob.back() += 0.01;
  EXPECT_NE(instance_hash(a), instance_hash(b));
}
