#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "etaxi/road_network.hpp"
#include "etaxi/trip_ingest.hpp"

namespace etaxi {

/// Grid city with weighted hot spots. Each taxi works one shift per day:
/// exponential gaps between trips, pick-ups at its last drop-off or at a
/// weighted random junction, destinations weighted towards hot spots.
struct SyntheticCityConfig {
  int rows = 5;
  int cols = 5;
  double spacing_km = 0.4;
  LatLon origin{40.75, -73.99};
  std::vector<int> hot_spots{6, 12, 18};  ///< grid indices r * cols + c
  double hot_weight = 5.0;
  int n_taxis = 30;
  int n_days = 10;  ///< consecutive weekdays
  std::string first_day = "2013-03-04";
  double mean_gap_min = 6.0;
  double idle_fraction = 0.15;
  int discrepancy_rows = 3;  ///< recorded distance 1 km longer than the route
  int malformed_rows = 2;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticCity {
  RoadGraph graph;
  std::vector<ChargingStation> stations;
  std::vector<TripRecord> trips;
  int malformed_rows = 0;
};

/// Junction ids are 1 + r * cols + c; row 0 is the southern edge.
SyntheticCity generate_synthetic_city(const SyntheticCityConfig& config);

/// Synthetic hourly speed profile (km/h).
double synthetic_speed_kmh(int hour);

/// Trip CSV in the ingest schema, followed by the malformed rows.
void write_trips_csv(std::ostream& out, std::span<const TripRecord> trips, int malformed_rows = 0);
void write_stations_csv(std::ostream& out, std::span<const ChargingStation> stations);

}  // namespace etaxi
