#include <gtest/gtest.h>

#include <sstream>

#include "etaxi/synthetic_city.hpp"

using namespace etaxi;

TEST(SyntheticCity, ShapeAndDeterminism) {
  SyntheticCityConfig cfg;
  cfg.n_days = 2;
  const auto a = generate_synthetic_city(cfg);
  const auto b = generate_synthetic_city(cfg);
  EXPECT_EQ(a.graph.size(), 25u);
  EXPECT_EQ(a.graph.edges().size(), 80u);
  EXPECT_EQ(a.stations.size(), 2u);
  std::ostringstream ta, tb;
  write_trips_csv(ta, a.trips, a.malformed_rows);
  write_trips_csv(tb, b.trips, b.malformed_rows);
  EXPECT_EQ(ta.str(), tb.str());
  cfg.seed = 8;
  std::ostringstream tc;
  write_trips_csv(tc, generate_synthetic_city(cfg).trips);
  EXPECT_NE(ta.str(), tc.str());
}

TEST(SyntheticCity, IngestRejectsExactlyTheInjectedRows) {
  SyntheticCityConfig cfg;
  cfg.n_days = 2;
  cfg.discrepancy_rows = 1;
  cfg.malformed_rows = 2;
  const auto city = generate_synthetic_city(cfg);
  std::stringstream csv;
  write_trips_csv(csv, city.trips, city.malformed_rows);
  auto parsed = parse_trips(csv);
  auto out = snap_and_filter(parsed.trips, city.graph, {}, parsed.report);
  EXPECT_EQ(out.report.rejected.at("malformed"), 2u);
  EXPECT_EQ(out.report.rejected.at("route_discrepancy"), 1u);
  EXPECT_EQ(out.report.kept, city.trips.size() - 1);
}

TEST(SyntheticCity, TripsStayInsideShifts) {
  SyntheticCityConfig cfg;
  cfg.n_days = 1;
  const auto city = generate_synthetic_city(cfg);
  ASSERT_FALSE(city.trips.empty());
  for (const auto& t : city.trips) {
    EXPECT_GT(t.dropoff_time, t.pickup_time);
    EXPECT_EQ(day_type(t.pickup_time), DayType::Weekday);
    EXPECT_GE(t.trip_distance_km, 0.0);
  }
}

TEST(SyntheticCity, ConfigValidation) {
  SyntheticCityConfig cfg;
  cfg.hot_spots = {99};
  EXPECT_THROW(generate_synthetic_city(cfg), ConfigError);
  cfg = {};
  cfg.first_day = "2013-13-01";
  EXPECT_THROW(generate_synthetic_city(cfg), ConfigError);
}
