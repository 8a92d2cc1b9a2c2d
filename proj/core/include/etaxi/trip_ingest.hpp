#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "etaxi/civil_time.hpp"
#include "etaxi/common.hpp"
#include "etaxi/geo.hpp"
#include "etaxi/road_network.hpp"

namespace etaxi {

struct TripRecord {
  std::string taxi_id;
  WallMinute pickup_time = 0;
  WallMinute dropoff_time = 0;
  double trip_distance_km = 0.0;
  LatLon pickup_loc;
  LatLon dropoff_loc;
  std::optional<double> recorded_fare;
};

/// Column names in the trip CSV. `fare_usd` may be absent from the file.
struct TripSchema {
  std::string taxi_id = "taxi_id";
  std::string pickup_datetime = "pickup_datetime";
  std::string dropoff_datetime = "dropoff_datetime";
  std::string trip_distance_km = "trip_distance_km";
  std::string pickup_lat = "pickup_lat";
  std::string pickup_lon = "pickup_lon";
  std::string dropoff_lat = "dropoff_lat";
  std::string dropoff_lon = "dropoff_lon";
  std::string fare_usd = "fare_usd";
};

enum class RejectReason {
  Malformed,
  NonPositiveDuration,
  NegativeDistance,
  OutOfBounds,
  SnapFailure,
  NoPath,
  RouteDiscrepancy,
};

std::string to_string(RejectReason r);

struct RejectReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> rejected;

  RejectReport();
  void reject(RejectReason r, std::size_t n = 1) { rejected[to_string(r)] += n; }
  std::size_t count(RejectReason r) const { return rejected.at(to_string(r)); }
  std::size_t rejected_total() const;
  nlohmann::ordered_json to_json() const;
};

struct ParseResult {
  std::vector<TripRecord> trips;
  RejectReport report;
};

/// Parses a headered trip CSV. Rows that fail to parse or violate record
/// invariants are counted in the report and skipped. Throws SchemaError when
/// a required column is missing and IoError when the stream is unreadable.
ParseResult parse_trips(std::istream& source, const TripSchema& schema = {},
                        const BoundingBox& bbox = {});

struct SnappedTrip {
  std::string taxi_id;
  NodeIndex origin = 0;
  NodeIndex dest = 0;
  WallMinute pickup_time = 0;
  int duration_min = 1;
  double distance_km = 0.0;
  std::optional<double> recorded_fare;

  WallMinute dropoff_time() const { return pickup_time + duration_min; }
  Shift shift() const { return assign_shift(pickup_time); }
  /// Minutes since the start of the shift containing the pick-up.
  int start_slot() const { return static_cast<int>(pickup_time - shift_start(pickup_time)); }
};

inline constexpr double kDefaultMaxSnapKm = 0.5;
inline constexpr double kRouteDiscrepancyKm = 0.3;

/// Nearest junction (ties to the smaller id) or nullopt beyond `max_snap_km`.
std::optional<NodeIndex> snap_to_junction(LatLon loc, const RoadGraph& graph,
                                          double max_snap_km = kDefaultMaxSnapKm);

enum class RouteVerdict { Keep, Discard, NoPath };

/// Discard iff |recorded distance - shortest-path distance| > threshold.
RouteVerdict filter_by_route_discrepancy(const SnappedTrip& trip, const RoadGraph& graph,
                                         double threshold_km = kRouteDiscrepancyKm);
RouteVerdict route_verdict(double recorded_km, double shortest_km,
                           double threshold_km = kRouteDiscrepancyKm);

struct IngestConfig {
  double max_snap_km = kDefaultMaxSnapKm;
  double discrepancy_km = kRouteDiscrepancyKm;
};

struct IngestResult {
  std::vector<SnappedTrip> trips;
  RejectReport report;
};

/// Snap and route-filter parsed records. Output preserves input order.
/// `report` is extended in place (pass the parse report to get totals).
IngestResult snap_and_filter(std::span<const TripRecord> records, const RoadGraph& graph,
                             const IngestConfig& config, RejectReport report);

/// Re-applies the route-discrepancy filter to already snapped trips.
std::vector<SnappedTrip> filter_snapped(std::span<const SnappedTrip> trips, const RoadGraph& graph,
                                        double threshold_km = kRouteDiscrepancyKm);

SpeedSample to_speed_sample(const SnappedTrip& t);
std::vector<SpeedSample> to_speed_samples(std::span<const SnappedTrip> trips);

/// Snapped-trip store (CSV keyed by external junction ids).
void write_trip_store(std::ostream& out, std::span<const SnappedTrip> trips,
                      const RoadGraph& graph);
std::vector<SnappedTrip> read_trip_store(std::istream& in, const RoadGraph& graph);

}  // namespace etaxi
