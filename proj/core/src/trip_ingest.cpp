#include "etaxi/trip_ingest.hpp"

#include <cmath>
#include <unordered_map>

#include "etaxi/csv.hpp"

namespace etaxi {

std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Malformed: return "malformed";
    case RejectReason::NonPositiveDuration: return "nonpositive_duration";
    case RejectReason::NegativeDistance: return "negative_distance";
    case RejectReason::OutOfBounds: return "out_of_bbox";
    case RejectReason::SnapFailure: return "snap_failure";
    case RejectReason::NoPath: return "no_path";
    case RejectReason::RouteDiscrepancy: return "route_discrepancy";
  }
  return "unknown";
}

RejectReport::RejectReport() {
  for (auto r : {RejectReason::Malformed, RejectReason::NonPositiveDuration,
                 RejectReason::NegativeDistance, RejectReason::OutOfBounds,
                 RejectReason::SnapFailure, RejectReason::NoPath,
                 RejectReason::RouteDiscrepancy}) {
    rejected[to_string(r)] = 0;
  }
}

std::size_t RejectReport::rejected_total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : rejected) n += c;
  return n;
}

nlohmann::ordered_json RejectReport::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["kept"] = kept;
  nlohmann::ordered_json r = nlohmann::ordered_json::object();
  for (const auto& [k, v] : rejected) r[k] = v;
  j["rejected"] = std::move(r);
  return j;
}

ParseResult parse_trips(std::istream& source, const TripSchema& schema, const BoundingBox& bbox) {
  if (!source) throw IoError("trip source is not readable");
  csv::Reader reader(source);
  if (!reader.read_header()) throw SchemaError("trip CSV is empty (no header row)");

  auto require = [&](const std::string& name) {
    auto c = reader.column(name);
    if (!c) throw SchemaError("trip CSV is missing required column '" + name + "'");
    return *c;
  };
  const std::size_t c_taxi = require(schema.taxi_id);
  const std::size_t c_pick = require(schema.pickup_datetime);
  const std::size_t c_drop = require(schema.dropoff_datetime);
  const std::size_t c_dist = require(schema.trip_distance_km);
  const std::size_t c_plat = require(schema.pickup_lat);
  const std::size_t c_plon = require(schema.pickup_lon);
  const std::size_t c_dlat = require(schema.dropoff_lat);
  const std::size_t c_dlon = require(schema.dropoff_lon);
  const auto c_fare = reader.column(schema.fare_usd);

  ParseResult out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    ++out.report.total;
    if (f.size() < reader.header().size()) {
      out.report.reject(RejectReason::Malformed);
      continue;
    }
    const auto pick = parse_timestamp(f[c_pick]);
    const auto drop = parse_timestamp(f[c_drop]);
    const auto dist = csv::to_double(f[c_dist]);
    const auto plat = csv::to_double(f[c_plat]);
    const auto plon = csv::to_double(f[c_plon]);
    const auto dlat = csv::to_double(f[c_dlat]);
    const auto dlon = csv::to_double(f[c_dlon]);
    if (f[c_taxi].empty() || !pick || !drop || !dist || !plat || !plon || !dlat || !dlon) {
      out.report.reject(RejectReason::Malformed);
      continue;
    }
    std::optional<double> fare;
    if (c_fare && !f[*c_fare].empty()) {
      fare = csv::to_double(f[*c_fare]);
      if (!fare) {
        out.report.reject(RejectReason::Malformed);
        continue;
      }
    }
    if (*drop <= *pick) {
      out.report.reject(RejectReason::NonPositiveDuration);
      continue;
    }
    if (*dist < 0.0) {
      out.report.reject(RejectReason::NegativeDistance);
      continue;
    }
    const LatLon p{*plat, *plon};
    const LatLon d{*dlat, *dlon};
    if (!bbox.contains(p) || !bbox.contains(d)) {
      out.report.reject(RejectReason::OutOfBounds);
      continue;
    }
    out.trips.push_back({f[c_taxi], *pick, *drop, *dist, p, d, fare});
  }
  if (source.bad()) throw IoError("error while reading trip source");
  out.report.kept = out.trips.size();
  return out;
}

std::optional<NodeIndex> snap_to_junction(LatLon loc, const RoadGraph& graph, double max_snap_km) {
  if (graph.empty()) throw DataError("cannot snap to an empty road network");
  return graph.snap(loc, max_snap_km);
}

RouteVerdict route_verdict(double recorded_km, double shortest_km, double threshold_km) {
  if (!std::isfinite(shortest_km)) return RouteVerdict::NoPath;
  return std::abs(recorded_km - shortest_km) > threshold_km ? RouteVerdict::Discard
                                                            : RouteVerdict::Keep;
}

RouteVerdict filter_by_route_discrepancy(const SnappedTrip& trip, const RoadGraph& graph,
                                         double threshold_km) {
  if (trip.origin == trip.dest) return route_verdict(trip.distance_km, 0.0, threshold_km);
  DistanceTree tree(graph, trip.dest);
  return route_verdict(trip.distance_km, tree.distance_from(trip.origin), threshold_km);
}

namespace {

// Distances grouped by destination so each reverse tree is built once.
std::vector<double> shortest_distances(std::span<const SnappedTrip> trips, const RoadGraph& graph) {
  std::vector<double> d(trips.size(), kInf);
  std::unordered_map<NodeIndex, std::vector<std::size_t>> by_dest;
  for (std::size_t k = 0; k < trips.size(); ++k) {
    if (trips[k].origin == trips[k].dest) d[k] = 0.0;
    else by_dest[trips[k].dest].push_back(k);
  }
  for (const auto& [dest, idx] : by_dest) {
    DistanceTree tree(graph, dest);
    for (auto k : idx) d[k] = tree.distance_from(trips[k].origin);
  }
  return d;
}

}  // namespace

IngestResult snap_and_filter(std::span<const TripRecord> records, const RoadGraph& graph,
                             const IngestConfig& config, RejectReport report) {
  std::vector<SnappedTrip> snapped;
  snapped.reserve(records.size());
  std::size_t snap_failures = 0;
  for (const auto& r : records) {
    const auto o = snap_to_junction(r.pickup_loc, graph, config.max_snap_km);
    const auto d = snap_to_junction(r.dropoff_loc, graph, config.max_snap_km);
    if (!o || !d) {
      ++snap_failures;
      continue;
    }
    snapped.push_back({r.taxi_id, *o, *d, r.pickup_time,
                       static_cast<int>(r.dropoff_time - r.pickup_time), r.trip_distance_km,
                       r.recorded_fare});
  }
  report.reject(RejectReason::SnapFailure, snap_failures);

  const auto dist = shortest_distances(snapped, graph);
  IngestResult out;
  out.trips.reserve(snapped.size());
  for (std::size_t k = 0; k < snapped.size(); ++k) {
    switch (route_verdict(snapped[k].distance_km, dist[k], config.discrepancy_km)) {
      case RouteVerdict::Keep: out.trips.push_back(std::move(snapped[k])); break;
      case RouteVerdict::Discard: report.reject(RejectReason::RouteDiscrepancy); break;
      case RouteVerdict::NoPath: report.reject(RejectReason::NoPath); break;
    }
  }
  report.kept = out.trips.size();
  out.report = std::move(report);
  return out;
}

std::vector<SnappedTrip> filter_snapped(std::span<const SnappedTrip> trips, const RoadGraph& graph,
                                        double threshold_km) {
  const auto dist = shortest_distances(trips, graph);
  std::vector<SnappedTrip> out;
  for (std::size_t k = 0; k < trips.size(); ++k) {
    if (route_verdict(trips[k].distance_km, dist[k], threshold_km) == RouteVerdict::Keep) {
      out.push_back(trips[k]);
    }
  }
  return out;
}

SpeedSample to_speed_sample(const SnappedTrip& t) {
  return {t.origin, t.dest, hour_of_day(t.pickup_time), static_cast<double>(t.duration_min),
          t.distance_km};
}

std::vector<SpeedSample> to_speed_samples(std::span<const SnappedTrip> trips) {
  std::vector<SpeedSample> out;
  out.reserve(trips.size());
  for (const auto& t : trips) out.push_back(to_speed_sample(t));
  return out;
}

void write_trip_store(std::ostream& out, std::span<const SnappedTrip> trips,
                      const RoadGraph& graph) {
  out << "taxi_id,pickup_datetime,duration_min,distance_km,origin_junction,dest_junction,"
         "fare_usd,shift,start_slot\n";
  for (const auto& t : trips) {
    out << csv::quote(t.taxi_id) << ',' << format_timestamp(t.pickup_time) << ','
        << t.duration_min << ',' << csv::format_double(t.distance_km) << ','
        << graph.junction(t.origin).id << ',' << graph.junction(t.dest).id << ','
        << (t.recorded_fare ? csv::format_double(*t.recorded_fare) : std::string()) << ','
        << to_string(t.shift()) << ',' << t.start_slot() << '\n';
  }
}

std::vector<SnappedTrip> read_trip_store(std::istream& in, const RoadGraph& graph) {
  csv::Reader reader(in);
  if (!reader.read_header()) throw SchemaError("trip store is empty");
  auto col = [&](const char* name) {
    auto c = reader.column(name);
    if (!c) throw SchemaError(std::string("trip store is missing column '") + name + "'");
    return *c;
  };
  const auto c_taxi = col("taxi_id"), c_pick = col("pickup_datetime"),
             c_dur = col("duration_min"), c_dist = col("distance_km"),
             c_o = col("origin_junction"), c_d = col("dest_junction"), c_fare = col("fare_usd");
  std::vector<SnappedTrip> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto pick = parse_timestamp(f.at(c_pick));
    const auto dur = csv::to_int(f.at(c_dur));
    const auto dist = csv::to_double(f.at(c_dist));
    const auto o = csv::to_int(f.at(c_o));
    const auto d = csv::to_int(f.at(c_d));
    if (!pick || !dur || !dist || !o || !d || *dur < 1) {
      throw DataError("malformed trip store row at line " + std::to_string(reader.line_number()));
    }
    const auto oi = graph.index_of(*o), di = graph.index_of(*d);
    if (!oi || !di) throw DataError("trip store references unknown junction");
    SnappedTrip t{f[c_taxi], *oi, *di, *pick, static_cast<int>(*dur), *dist, std::nullopt};
    if (!f.at(c_fare).empty()) t.recorded_fare = csv::to_double(f[c_fare]);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace etaxi
