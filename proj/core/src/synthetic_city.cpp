#include "etaxi/synthetic_city.hpp"

#include <algorithm>
#include <cmath>

#include "etaxi/csv.hpp"
#include "etaxi/fare_model.hpp"
#include "etaxi/fleet_sim.hpp"

namespace etaxi {

void SyntheticCityConfig::validate() const {
  if (rows < 2 || cols < 2) throw ConfigError("synthetic city needs at least 2x2 junctions");
  if (!(spacing_km > 0.0)) throw ConfigError("grid spacing must be positive");
  for (int h : hot_spots) {
    if (h < 0 || h >= rows * cols) throw ConfigError("hot spot outside the grid");
  }
  if (!(hot_weight >= 1.0)) throw ConfigError("hot-spot weight must be at least 1");
  if (n_taxis < 1 || n_days < 1) throw ConfigError("need at least one taxi and one day");
  if (!(mean_gap_min > 0.0)) throw ConfigError("mean gap must be positive");
  if (!(idle_fraction >= 0.0 && idle_fraction < 1.0)) {
    throw ConfigError("idle fraction must lie in [0, 1)");
  }
  if (discrepancy_rows < 0 || malformed_rows < 0) throw ConfigError("row counts must be >= 0");
  if (!parse_date(first_day)) throw ConfigError("bad first_day: " + first_day);
}

double synthetic_speed_kmh(int hour) {
  if ((hour >= 7 && hour < 10) || (hour >= 16 && hour < 19)) return 16.0;
  if (hour >= 22 || hour < 5) return 32.0;
  return 24.0;
}

namespace {

struct Sampler {
  std::mt19937_64 rng;
  double u() { return uniform01(rng); }
  double exponential(double mean) { return -mean * std::log1p(-u()); }
  std::size_t weighted(const std::vector<double>& w, double total) {
    double x = u() * total;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (x < w[k]) return k;
      x -= w[k];
    }
    return w.size() - 1;
  }
};

LatLon jitter(Sampler& s, LatLon p) {
  return offset_km(p, (s.u() - 0.5) * 0.04, (s.u() - 0.5) * 0.04);
}

}  // namespace

SyntheticCity generate_synthetic_city(const SyntheticCityConfig& config) {
  config.validate();
  const int n = config.rows * config.cols;
  std::vector<Junction> junctions;
  for (int r = 0; r < config.rows; ++r) {
    for (int c = 0; c < config.cols; ++c) {
      junctions.push_back({1 + r * config.cols + c,
                           offset_km(config.origin, r * config.spacing_km, c * config.spacing_km)});
    }
  }
  std::vector<EdgeSpec> edges;
  auto link = [&](int a, int b) {
    const double km = haversine_km(junctions[a].pos, junctions[b].pos);
    edges.push_back({junctions[a].id, junctions[b].id, km});
    edges.push_back({junctions[b].id, junctions[a].id, km});
  };
  for (int r = 0; r < config.rows; ++r) {
    for (int c = 0; c < config.cols; ++c) {
      const int k = r * config.cols + c;
      if (c + 1 < config.cols) link(k, k + 1);
      if (r + 1 < config.rows) link(k, k + config.cols);
    }
  }

  SyntheticCity city;
  city.graph = RoadGraph(junctions, edges);
  city.malformed_rows = config.malformed_rows;
  const int near = 1 * config.cols + 1;
  const int far = (config.rows - 2) * config.cols + (config.cols - 2);
  city.stations.push_back({"S1", city.graph.junction(near).pos, static_cast<NodeIndex>(near), true,
                           true});
  city.stations.push_back({"S2", city.graph.junction(far).pos, static_cast<NodeIndex>(far), true,
                           true});

  std::vector<double> weight(n, 1.0);
  for (int h : config.hot_spots) weight[h] = config.hot_weight;
  double total_weight = 0.0;
  for (double w : weight) total_weight += w;

  // Shortest distances between all junction pairs.
  std::vector<double> km(static_cast<std::size_t>(n) * n);
  for (NodeIndex j = 0; j < static_cast<NodeIndex>(n); ++j) {
    DistanceTree tree(city.graph, j);
    for (NodeIndex i = 0; i < static_cast<NodeIndex>(n); ++i) km[i * n + j] = tree.distance_from(i);
  }

  const Tariff tariff;
  Sampler s{make_stream(config.seed, 0)};
  WallMinute day = *parse_date(config.first_day);
  for (int d = 0; d < config.n_days; ++d) {
    while (day_type(day) == DayType::Weekend) day += kMinutesPerDay;
    for (int k = 0; k < config.n_taxis; ++k) {
      char id[16];
      std::snprintf(id, sizeof id, "T%03d", k);
      const bool morning = k % 2 == 0;
      WallMinute t = day + (morning ? kMorningStartHour : kEveningStartHour) * 60 +
                     static_cast<WallMinute>(s.u() * 60.0);
      const WallMinute end = t + 10 * 60;
      std::size_t at = s.weighted(weight, total_weight);
      while (true) {
        t += 1 + static_cast<WallMinute>(s.exponential(config.mean_gap_min));
        if (t >= end) break;
        if (s.u() >= 0.5) at = s.weighted(weight, total_weight);
        std::size_t to = at;
        while (to == at) to = s.weighted(weight, total_weight);
        const double dist = km[at * n + to];
        const double speed = synthetic_speed_kmh(hour_of_day(t));
        const int duration = std::max(
            1, static_cast<int>(std::ceil(dist / speed * 60.0 * (1.0 + config.idle_fraction))));
        const double recorded = std::max(0.01, dist + (s.u() - 0.5) * 0.1);
        double f = metered_fare(tariff, recorded, 0.0) +
                   time_surcharges(tariff, minute_of_day(t), true);
        f = std::round(f * 100.0) / 100.0;
        city.trips.push_back({id, t, t + duration, recorded,
                              jitter(s, city.graph.junction(at).pos),
                              jitter(s, city.graph.junction(to).pos), f});
        t += duration;
        at = to;
      }
    }
    day += kMinutesPerDay;
  }
  for (int r = 0; r < config.discrepancy_rows && !city.trips.empty(); ++r) {
    auto& trip = city.trips[static_cast<std::size_t>(s.u() * city.trips.size())];
    trip.trip_distance_km += 1.0;
  }
  return city;
}

void write_trips_csv(std::ostream& out, std::span<const TripRecord> trips, int malformed_rows) {
  using csv::format_double;
  out << "taxi_id,pickup_datetime,dropoff_datetime,trip_distance_km,pickup_lat,pickup_lon,"
         "dropoff_lat,dropoff_lon,fare_usd\n";
  for (const auto& t : trips) {
    out << csv::quote(t.taxi_id) << ',' << format_timestamp(t.pickup_time) << ','
        << format_timestamp(t.dropoff_time) << ',' << format_double(t.trip_distance_km) << ','
        << format_double(t.pickup_loc.lat) << ',' << format_double(t.pickup_loc.lon) << ','
        << format_double(t.dropoff_loc.lat) << ',' << format_double(t.dropoff_loc.lon) << ','
        << (t.recorded_fare ? format_double(*t.recorded_fare) : std::string()) << '\n';
  }
  for (int k = 0; k < malformed_rows; ++k) {
    out << "BAD" << k << ",not-a-time,2013-03-04 10:00:00,1.0,40.75,-73.99,40.75,-73.99,\n";
  }
}

void write_stations_csv(std::ostream& out, std::span<const ChargingStation> stations) {
  out << "id,lat,lon,modes\n";
  for (const auto& s : stations) {
    std::string modes;
    if (s.mode3) modes = "mode3";
    if (s.fast_dc) modes += modes.empty() ? "fast_dc" : ";fast_dc";
    out << csv::quote(s.id) << ',' << csv::format_double(s.pos.lat) << ','
        << csv::format_double(s.pos.lon) << ',' << modes << '\n';
  }
}

}  // namespace etaxi
