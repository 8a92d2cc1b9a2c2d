#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etaxi/common.hpp"
#include "etaxi/geo.hpp"

namespace etaxi {

struct Junction {
  JunctionId id = 0;
  LatLon pos;
};

struct EdgeSpec {
  JunctionId from = 0;
  JunctionId to = 0;
  double km = 0.0;
};

struct Edge {
  NodeIndex from = 0;
  NodeIndex to = 0;
  double km = 0.0;
};

/// Directed junction graph. Junctions are stored sorted by id so that the
/// smallest NodeIndex is also the smallest JunctionId.
class RoadGraph {
 public:
  RoadGraph() = default;
  /// Throws DataError on duplicate ids, unknown edge endpoints or lengths <= 0.
  RoadGraph(std::vector<Junction> junctions, const std::vector<EdgeSpec>& edges);

  std::size_t size() const { return junctions_.size(); }
  bool empty() const { return junctions_.empty(); }
  const Junction& junction(NodeIndex i) const { return junctions_[i]; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::optional<NodeIndex> index_of(JunctionId id) const;

  std::span<const std::uint32_t> out_edges(NodeIndex i) const;
  std::span<const std::uint32_t> in_edges(NodeIndex i) const;

  /// Nearest junction by great-circle distance; ties go to the smaller id.
  /// Returns nullopt when the nearest junction is farther than `max_km`.
  std::optional<NodeIndex> snap(LatLon p, double max_km) const;

 private:
  std::vector<Junction> junctions_;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> out_offsets_, out_list_;
  std::vector<std::uint32_t> in_offsets_, in_list_;
  std::vector<NodeIndex> by_lat_;
};

struct Path {
  std::vector<NodeIndex> nodes;     ///< origin .. destination
  std::vector<std::uint32_t> edges;  ///< edge indices, nodes.size() - 1 of them
  double km = 0.0;
};

/// Shortest distances from every junction to a fixed target (reverse Dijkstra).
/// Path extraction is greedy on the smallest next junction among tight edges,
/// which yields the lexicographically smallest junction sequence among all
/// distance-minimal paths.
class DistanceTree {
 public:
  DistanceTree(const RoadGraph& graph, NodeIndex target);

  NodeIndex target() const { return target_; }
  double distance_from(NodeIndex i) const { return dist_[i]; }
  bool reachable(NodeIndex i) const { return dist_[i] < kInf; }
  std::optional<Path> path_from(NodeIndex i) const;

 private:
  const RoadGraph* graph_;
  NodeIndex target_;
  std::vector<double> dist_;
};

/// Throws NoPathError when j is unreachable from i.
Path shortest_path(const RoadGraph& graph, NodeIndex i, NodeIndex j);

// ---------------------------------------------------------------------------
// Time-dependent speed network

struct SpeedConfig {
  double default_kmh = 25.0;
  double cap_kmh = 110.0;
};

struct TravelEstimate {
  double driving_min = 0.0;
  double idling_min = 0.0;
  double total_min = 0.0;  ///< driving + idling, unrounded
  int slots = 0;           ///< total rounded up to whole minutes, >= 1 unless i == j
  double distance_km = 0.0;
};

/// Observation used to label speeds and idling statistics.
struct SpeedSample {
  NodeIndex origin = 0;
  NodeIndex dest = 0;
  int pickup_hour = 0;
  double duration_min = 0.0;
  double distance_km = 0.0;
};

class SpeedNetwork {
 public:
  using HourlySpeeds = std::array<double, kHoursPerDay>;

  SpeedNetwork() = default;
  /// All segments at the default speed, zero idling.
  SpeedNetwork(RoadGraph graph, SpeedConfig config);

  const RoadGraph& graph() const { return graph_; }
  const SpeedConfig& config() const { return config_; }

  double speed_kmh(std::uint32_t edge, int hour) const { return speeds_[edge][hour]; }
  void set_speed(std::uint32_t edge, int hour, double kmh) { speeds_[edge][hour] = kmh; }
  const std::vector<HourlySpeeds>& speeds() const { return speeds_; }

  double idling_ratio(int hour) const { return idling_[hour]; }
  const std::array<double, kHoursPerDay>& idling_ratios() const { return idling_; }
  void set_idling_ratios(const std::array<double, kHoursPerDay>& r);

  /// Length-weighted mean segment speed at `hour`.
  double mean_speed_kmh(int hour) const;

  /// Driving time along a path at the segment speeds of `hour`, minutes.
  double driving_minutes(const Path& path, int hour) const;

  /// Travel estimate for departing along `path` at clock minute-of-day `minute`.
  TravelEstimate travel(const Path& path, int minute) const;
  /// Convenience wrapper that routes first; throws NoPathError.
  TravelEstimate travel_time(NodeIndex i, NodeIndex j, int minute) const;

 private:
  RoadGraph graph_;
  SpeedConfig config_;
  std::vector<HourlySpeeds> speeds_;
  std::array<double, kHoursPerDay> idling_{};
};

/// Per-hour maximum observed average speed on each traversed segment;
/// untraversed (edge, hour) cells keep the default speed. Speeds above the
/// cap are clamped. Samples with origin == dest or no path are ignored.
SpeedNetwork label_segment_speeds(RoadGraph graph, std::span<const SpeedSample> samples,
                                  SpeedConfig config = {});

/// Idling ratio of one trip: (T^t - T^d) / T^t clamped to [0, 1).
double idling_ratio(double total_min, double driving_min);

/// Per-hour median idling ratio; empty hours inherit the nearest populated
/// hour (circular, earlier hour wins ties); all-empty yields zeros.
std::array<double, kHoursPerDay> idling_ratio_stats(const SpeedNetwork& network,
                                                    std::span<const SpeedSample> samples);

/// Fills empty hours from the nearest populated hour.
std::array<double, kHoursPerDay> fill_nearest_hour(
    const std::array<std::optional<double>, kHoursPerDay>& values, double fallback);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Charging stations

enum class ChargeMode { Mode3, FastDC };

struct ChargingStation {
  std::string id;
  LatLon pos;
  NodeIndex junction = kNoNode;
  bool mode3 = true;
  bool fast_dc = false;

  bool supports(ChargeMode m) const { return m == ChargeMode::Mode3 ? mode3 : fast_dc; }
};

struct NearestStation {
  int station = -1;  ///< index into the station list, -1 when unreachable
  double km = kInf;
  bool reachable() const { return station >= 0; }
};

/// r(i) for every junction: the station with minimal shortest-path distance
/// from i (ties to the lower station index).
class StationTable {
 public:
  /// Throws ConfigError when `stations` is empty.
  StationTable(const RoadGraph& graph, std::vector<ChargingStation> stations);

  const std::vector<ChargingStation>& stations() const { return stations_; }
  const NearestStation& nearest(NodeIndex i) const { return nearest_[i]; }
  const std::vector<NearestStation>& table() const { return nearest_; }
  /// Path from i to r(i); nullopt when unreachable.
  std::optional<Path> path_to_nearest(const RoadGraph& graph, NodeIndex i) const;

 private:
  std::vector<ChargingStation> stations_;
  std::vector<NearestStation> nearest_;
};

std::string to_string(ChargeMode m);
ChargeMode parse_charge_mode(std::string_view s);

}  // namespace etaxi
