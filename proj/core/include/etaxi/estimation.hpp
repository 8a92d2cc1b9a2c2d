#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "etaxi/civil_time.hpp"
#include "etaxi/road_network.hpp"
#include "etaxi/trip_ingest.hpp"

namespace etaxi {

struct DestinationEntry {
  NodeIndex dest = 0;
  double prob = 0.0;
  std::uint32_t count = 0;
};

/// Hourly demand parameters for one day type. Dense tables are indexed
/// [hour * n_junctions + junction].
struct DemandModel {
  DayType day_type = DayType::Weekday;
  std::size_t n_junctions = 0;
  std::array<double, kHoursPerDay> tau_min{};
  std::array<double, kHoursPerDay> delta_km{};
  std::vector<double> pickup_prob;
  std::vector<double> pickup_count;      ///< pick-ups summed over the hour's windows
  std::vector<double> competitor_count;  ///< nearby drop-offs summed over the hour's windows
  std::vector<std::vector<DestinationEntry>> dest;
  std::vector<std::uint64_t> pickups_total;  ///< per junction, all hours

  std::size_t cell(int hour, NodeIndex i) const { return hour * n_junctions + i; }
  double pickup(int hour, NodeIndex i) const { return pickup_prob[cell(hour, i)]; }
  const std::vector<DestinationEntry>& destinations(int hour, NodeIndex i) const {
    return dest[cell(hour, i)];
  }
  /// nullopt when junction i has no pick-ups in that hour (no-demand row).
  std::optional<double> destination(int hour, NodeIndex i, NodeIndex j) const;
};

/// Pick-up count over pick-ups plus drop-offs; 0 when both counts are 0.
double pickup_probability(double n_pickups, double n_competitors);

struct WindowCounts {
  double pickups = 0.0;
  double competitors = 0.0;
};

/// Counts for the window starting at clock minute `t` (pooled over every day
/// of the requested type): pick-ups at i in [t, t+tau) and drop-offs whose
/// drop-off junction lies within `delta_km` great-circle of i in [t-tau, t+tau).
WindowCounts count_window(NodeIndex i, double t, double tau, double delta_km,
                          std::span<const SnappedTrip> trips, const RoadGraph& graph,
                          std::optional<DayType> day = std::nullopt);

/// Single-window pick-up probability at junction i, clock minute t.
double pickup_probability(NodeIndex i, double t, double tau, double delta_km,
                          std::span<const SnappedTrip> trips, const RoadGraph& graph,
                          std::optional<DayType> day = std::nullopt);

/// Share of i's pick-ups in the hour that end at j; nullopt on an empty row.
std::optional<double> destination_probability(NodeIndex i, NodeIndex j, int hour,
                                              std::span<const SnappedTrip> trips,
                                              std::optional<DayType> day = std::nullopt);

struct InterPickupConfig {
  double max_gap_min = 120.0;   ///< longer gaps are off-duty breaks
  double fallback_min = 10.0;   ///< used when no gap is observed at all
};

/// Per-hour mean gap between a drop-off and the same taxi's next pick-up,
/// binned by the hour of the drop-off.
std::array<double, kHoursPerDay> inter_pickup_duration(std::span<const SnappedTrip> trips,
                                                       DayType day,
                                                       const InterPickupConfig& config = {});

inline constexpr double kMinReachableKm = 0.5;

/// delta(h) = mean network speed(h) * tau(h), at least kMinReachableKm.
std::array<double, kHoursPerDay> reachable_distance(const SpeedNetwork& net,
                                                    const std::array<double, kHoursPerDay>& tau);

struct EstimationConfig {
  DayType day_type = DayType::Weekday;
  InterPickupConfig inter_pickup;
};

/// Builds the hourly demand model. The hourly pick-up probability pools the
/// counts of consecutive windows t = 60h, 60h + tau, ... inside hour h.
DemandModel estimate_demand(std::span<const SnappedTrip> trips, const SpeedNetwork& net,
                            const EstimationConfig& config = {});

nlohmann::ordered_json demand_to_json(const DemandModel& m, const RoadGraph& graph);
DemandModel demand_from_json(const nlohmann::json& j, const RoadGraph& graph);

}  // namespace etaxi
