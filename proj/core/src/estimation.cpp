#include "etaxi/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "etaxi/csv.hpp"

namespace etaxi {

namespace {

/// Clock minute m (mod one day) inside the half-open window [a, b), b - a <= one day.
bool in_clock_window(double m, double a, double b) {
  double x = std::fmod(m - a, static_cast<double>(kMinutesPerDay));
  if (x < 0.0) x += kMinutesPerDay;
  return x < b - a;
}

bool day_matches(WallMinute m, std::optional<DayType> day) {
  return !day || day_type(m) == *day;
}

}  // namespace

std::optional<double> DemandModel::destination(int hour, NodeIndex i, NodeIndex j) const {
  const auto& row = destinations(hour, i);
  if (row.empty()) return std::nullopt;
  for (const auto& e : row) {
    if (e.dest == j) return e.prob;
  }
  return 0.0;
}

double pickup_probability(double n_pickups, double n_competitors) {
  const double denom = n_pickups + n_competitors;
  return denom > 0.0 ? n_pickups / denom : 0.0;
}

WindowCounts count_window(NodeIndex i, double t, double tau, double delta_km,
                          std::span<const SnappedTrip> trips, const RoadGraph& graph,
                          std::optional<DayType> day) {
  WindowCounts c;
  const LatLon at = graph.junction(i).pos;
  for (const auto& trip : trips) {
    if (trip.origin == i && day_matches(trip.pickup_time, day) &&
        in_clock_window(minute_of_day(trip.pickup_time), t, t + tau)) {
      c.pickups += 1.0;
    }
    const WallMinute drop = trip.dropoff_time();
    if (day_matches(drop, day) && in_clock_window(minute_of_day(drop), t - tau, t + tau) &&
        haversine_km(at, graph.junction(trip.dest).pos) <= delta_km) {
      c.competitors += 1.0;
    }
  }
  return c;
}

double pickup_probability(NodeIndex i, double t, double tau, double delta_km,
                          std::span<const SnappedTrip> trips, const RoadGraph& graph,
                          std::optional<DayType> day) {
  const auto c = count_window(i, t, tau, delta_km, trips, graph, day);
  return pickup_probability(c.pickups, c.competitors);
}

std::optional<double> destination_probability(NodeIndex i, NodeIndex j, int hour,
                                              std::span<const SnappedTrip> trips,
                                              std::optional<DayType> day) {
  double from_i = 0.0, to_j = 0.0;
  for (const auto& t : trips) {
    if (t.origin != i || hour_of_day(t.pickup_time) != hour || !day_matches(t.pickup_time, day)) {
      continue;
    }
    from_i += 1.0;
    if (t.dest == j) to_j += 1.0;
  }
  if (from_i == 0.0) return std::nullopt;
  return to_j / from_i;
}

std::array<double, kHoursPerDay> inter_pickup_duration(std::span<const SnappedTrip> trips,
                                                       DayType day,
                                                       const InterPickupConfig& config) {
  std::map<std::string, std::vector<const SnappedTrip*>> by_taxi;
  for (const auto& t : trips) by_taxi[t.taxi_id].push_back(&t);

  std::array<double, kHoursPerDay> sum{};
  std::array<int, kHoursPerDay> n{};
  for (auto& [_, list] : by_taxi) {
    std::stable_sort(list.begin(), list.end(), [](const SnappedTrip* a, const SnappedTrip* b) {
      return a->pickup_time < b->pickup_time;
    });
    for (std::size_t k = 0; k + 1 < list.size(); ++k) {
      const WallMinute drop = list[k]->dropoff_time();
      const double gap = static_cast<double>(list[k + 1]->pickup_time - drop);
      if (gap < 0.0 || gap > config.max_gap_min || day_type(drop) != day) continue;
      const int h = hour_of_day(drop);
      sum[h] += gap;
      ++n[h];
    }
  }
  std::array<std::optional<double>, kHoursPerDay> mean;
  for (int h = 0; h < kHoursPerDay; ++h) {
    // A zero-length mean gap would make every window empty.
    if (n[h] > 0 && sum[h] > 0.0) mean[h] = sum[h] / n[h];
  }
  return fill_nearest_hour(mean, config.fallback_min);
}

std::array<double, kHoursPerDay> reachable_distance(const SpeedNetwork& net,
                                                    const std::array<double, kHoursPerDay>& tau) {
  std::array<double, kHoursPerDay> d;
  for (int h = 0; h < kHoursPerDay; ++h) {
    d[h] = std::max(kMinReachableKm, net.mean_speed_kmh(h) * tau[h] / 60.0);
  }
  return d;
}

DemandModel estimate_demand(std::span<const SnappedTrip> trips, const SpeedNetwork& net,
                            const EstimationConfig& config) {
  const auto& graph = net.graph();
  const std::size_t n = graph.size();
  DemandModel m;
  m.day_type = config.day_type;
  m.n_junctions = n;
  m.tau_min = inter_pickup_duration(trips, config.day_type, config.inter_pickup);
  m.delta_km = reachable_distance(net, m.tau_min);
  m.pickup_prob.assign(kHoursPerDay * n, 0.0);
  m.pickup_count.assign(kHoursPerDay * n, 0.0);
  m.competitor_count.assign(kHoursPerDay * n, 0.0);
  m.dest.assign(kHoursPerDay * n, {});
  m.pickups_total.assign(n, 0);

  // Destination counts per (hour, origin).
  std::vector<std::map<NodeIndex, std::uint32_t>> od(kHoursPerDay * n);
  for (const auto& t : trips) {
    if (day_type(t.pickup_time) != config.day_type) continue;
    ++od[m.cell(hour_of_day(t.pickup_time), t.origin)][t.dest];
    ++m.pickups_total[t.origin];
  }
  for (std::size_t c = 0; c < od.size(); ++c) {
    std::uint64_t total = 0;
    for (const auto& [_, k] : od[c]) total += k;
    for (const auto& [j, k] : od[c]) {
      m.dest[c].push_back({j, static_cast<double>(k) / static_cast<double>(total), k});
    }
  }

  // Pick-up and drop-off events as clock minutes, pooled over matching days.
  struct Event {
    double minute;
    NodeIndex junction;
  };
  std::vector<Event> pickups, dropoffs;
  for (const auto& t : trips) {
    if (day_type(t.pickup_time) == config.day_type) {
      pickups.push_back({static_cast<double>(minute_of_day(t.pickup_time)), t.origin});
    }
    const WallMinute drop = t.dropoff_time();
    if (day_type(drop) == config.day_type) {
      dropoffs.push_back({static_cast<double>(minute_of_day(drop)), t.dest});
    }
  }

  std::vector<double> np(n), dropped(n);
  for (int h = 0; h < kHoursPerDay; ++h) {
    const double tau = m.tau_min[h];
    const double delta = m.delta_km[h];
    std::vector<std::vector<NodeIndex>> near(n);
    for (NodeIndex i = 0; i < n; ++i) {
      for (NodeIndex j = 0; j < n; ++j) {
        if (haversine_km(graph.junction(i).pos, graph.junction(j).pos) <= delta) {
          near[i].push_back(j);
        }
      }
    }
    for (double t = 60.0 * h; t < 60.0 * (h + 1); t += tau) {
      std::fill(np.begin(), np.end(), 0.0);
      std::fill(dropped.begin(), dropped.end(), 0.0);
      for (const auto& e : pickups) {
        if (in_clock_window(e.minute, t, t + tau)) np[e.junction] += 1.0;
      }
      for (const auto& e : dropoffs) {
        if (in_clock_window(e.minute, t - tau, t + tau)) dropped[e.junction] += 1.0;
      }
      for (NodeIndex i = 0; i < n; ++i) {
        double nd = 0.0;
        for (auto j : near[i]) nd += dropped[j];
        m.pickup_count[m.cell(h, i)] += np[i];
        m.competitor_count[m.cell(h, i)] += nd;
      }
    }
    for (NodeIndex i = 0; i < n; ++i) {
      m.pickup_prob[m.cell(h, i)] =
          pickup_probability(m.pickup_count[m.cell(h, i)], m.competitor_count[m.cell(h, i)]);
    }
  }
  return m;
}

nlohmann::ordered_json demand_to_json(const DemandModel& m, const RoadGraph& graph) {
  using json = nlohmann::ordered_json;
  json j;
  j["day_type"] = to_string(m.day_type);
  j["tau_min"] = m.tau_min;
  j["delta_km"] = m.delta_km;
  json pp = json::object();
  for (int h = 0; h < kHoursPerDay; ++h) {
    json row = json::object();
    for (NodeIndex i = 0; i < m.n_junctions; ++i) {
      const auto c = m.cell(h, i);
      if (m.pickup_count[c] == 0.0 && m.competitor_count[c] == 0.0) continue;
      row[std::to_string(graph.junction(i).id)] =
          json::array({m.pickup_prob[c], m.pickup_count[c], m.competitor_count[c]});
    }
    pp[std::to_string(h)] = std::move(row);
  }
  j["pickup_prob_fields"] = json::array({"p", "n_pickups", "n_competitors"});
  j["pickup_prob"] = std::move(pp);
  json dest = json::array();
  for (int h = 0; h < kHoursPerDay; ++h) {
    for (NodeIndex i = 0; i < m.n_junctions; ++i) {
      for (const auto& e : m.destinations(h, i)) {
        dest.push_back(json::array(
            {h, graph.junction(i).id, graph.junction(e.dest).id, e.prob, e.count}));
      }
    }
  }
  j["dest_prob_fields"] = json::array({"hour", "from", "to", "p", "count"});
  j["dest_prob"] = std::move(dest);
  json totals = json::object();
  for (NodeIndex i = 0; i < m.n_junctions; ++i) {
    if (m.pickups_total[i] > 0) totals[std::to_string(graph.junction(i).id)] = m.pickups_total[i];
  }
  j["pickups_total"] = std::move(totals);
  return j;
}

DemandModel demand_from_json(const nlohmann::json& j, const RoadGraph& graph) {
  auto node = [&](JunctionId id) {
    auto k = graph.index_of(id);
    if (!k) throw DataError("demand model references unknown junction " + std::to_string(id));
    return *k;
  };
  auto node_str = [&](const std::string& s) {
    auto v = csv::to_int(s);
    if (!v) throw DataError("bad junction key '" + s + "' in demand model");
    return node(*v);
  };
  try {
    DemandModel m;
    const std::size_t n = graph.size();
    m.day_type = parse_day_type(j.at("day_type").get<std::string>());
    m.n_junctions = n;
    m.tau_min = j.at("tau_min").get<std::array<double, kHoursPerDay>>();
    m.delta_km = j.at("delta_km").get<std::array<double, kHoursPerDay>>();
    m.pickup_prob.assign(kHoursPerDay * n, 0.0);
    m.pickup_count.assign(kHoursPerDay * n, 0.0);
    m.competitor_count.assign(kHoursPerDay * n, 0.0);
    m.dest.assign(kHoursPerDay * n, {});
    m.pickups_total.assign(n, 0);
    for (const auto& [hs, row] : j.at("pickup_prob").items()) {
      const int h = std::stoi(hs);
      if (h < 0 || h >= kHoursPerDay) throw DataError("bad hour in demand model");
      for (const auto& [js, v] : row.items()) {
        const auto c = m.cell(h, node_str(js));
        m.pickup_prob[c] = v.at(0).get<double>();
        m.pickup_count[c] = v.at(1).get<double>();
        m.competitor_count[c] = v.at(2).get<double>();
      }
    }
    for (const auto& e : j.at("dest_prob")) {
      const int h = e.at(0).get<int>();
      const auto c = m.cell(h, node(e.at(1).get<JunctionId>()));
      m.dest[c].push_back(
          {node(e.at(2).get<JunctionId>()), e.at(3).get<double>(), e.at(4).get<std::uint32_t>()});
    }
    for (const auto& [js, v] : j.at("pickups_total").items()) {
      m.pickups_total[node_str(js)] = v.get<std::uint64_t>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed demand model: ") + e.what());
  }
}

}  // namespace etaxi
