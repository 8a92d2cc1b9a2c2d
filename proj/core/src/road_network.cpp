#include "etaxi/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <tuple>
#include <unordered_map>

namespace etaxi {

namespace {

constexpr double kTightEps = 1e-9;

void build_csr(std::size_t n, const std::vector<Edge>& edges, bool outgoing,
               std::vector<std::uint32_t>& offsets, std::vector<std::uint32_t>& list) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[(outgoing ? e.from : e.to) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  list.assign(edges.size(), 0);
  auto cursor = offsets;
  for (std::uint32_t k = 0; k < edges.size(); ++k) {
    const NodeIndex key = outgoing ? edges[k].from : edges[k].to;
    list[cursor[key]++] = k;
  }
}

}  // namespace

RoadGraph::RoadGraph(std::vector<Junction> junctions, const std::vector<EdgeSpec>& edges)
    : junctions_(std::move(junctions)) {
  std::sort(junctions_.begin(), junctions_.end(),
            [](const Junction& a, const Junction& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < junctions_.size(); ++k) {
    if (junctions_[k].id == junctions_[k - 1].id) {
      throw DataError("duplicate junction id " + std::to_string(junctions_[k].id));
    }
  }
  edges_.reserve(edges.size());
  for (const auto& e : edges) {
    const auto from = index_of(e.from);
    const auto to = index_of(e.to);
    if (!from || !to) {
      throw DataError("edge references unknown junction " + std::to_string(e.from) + "->" +
                      std::to_string(e.to));
    }
    if (!(e.km > 0.0) || !std::isfinite(e.km)) {
      throw DataError("edge length must be positive: " + std::to_string(e.from) + "->" +
                      std::to_string(e.to));
    }
    edges_.push_back({*from, *to, e.km});
  }
  build_csr(junctions_.size(), edges_, true, out_offsets_, out_list_);
  build_csr(junctions_.size(), edges_, false, in_offsets_, in_list_);
  by_lat_.resize(junctions_.size());
  std::iota(by_lat_.begin(), by_lat_.end(), NodeIndex{0});
  std::stable_sort(by_lat_.begin(), by_lat_.end(), [this](NodeIndex a, NodeIndex b) {
    return junctions_[a].pos.lat < junctions_[b].pos.lat;
  });
}

std::optional<NodeIndex> RoadGraph::index_of(JunctionId id) const {
  auto it = std::lower_bound(junctions_.begin(), junctions_.end(), id,
                             [](const Junction& j, JunctionId v) { return j.id < v; });
  if (it == junctions_.end() || it->id != id) return std::nullopt;
  return static_cast<NodeIndex>(it - junctions_.begin());
}

std::span<const std::uint32_t> RoadGraph::out_edges(NodeIndex i) const {
  return {out_list_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
}

std::span<const std::uint32_t> RoadGraph::in_edges(NodeIndex i) const {
  return {in_list_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
}

std::optional<NodeIndex> RoadGraph::snap(LatLon p, double max_km) const {
  if (junctions_.empty()) return std::nullopt;
  // Latitude band that can contain a junction within max_km (plus slack).
  const double band = (max_km / kEarthRadiusKm) * 180.0 / 3.14159265358979323846 + 1e-9;
  auto lo = std::lower_bound(by_lat_.begin(), by_lat_.end(), p.lat - band,
                             [this](NodeIndex a, double v) { return junctions_[a].pos.lat < v; });
  NodeIndex best = kNoNode;
  double best_km = kInf;
  for (auto it = lo; it != by_lat_.end() && junctions_[*it].pos.lat <= p.lat + band; ++it) {
    const double d = haversine_km(p, junctions_[*it].pos);
    if (d < best_km || (d == best_km && *it < best)) {
      best_km = d;
      best = *it;
    }
  }
  if (best == kNoNode || best_km > max_km) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------

DistanceTree::DistanceTree(const RoadGraph& graph, NodeIndex target)
    : graph_(&graph), target_(target), dist_(graph.size(), kInf) {
  using Item = std::pair<double, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist_[target] = 0.0;
  heap.emplace(0.0, target);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist_[v]) continue;
    for (auto k : graph.in_edges(v)) {
      const auto& e = graph.edges()[k];
      const double nd = d + e.km;
      if (nd < dist_[e.from]) {
        dist_[e.from] = nd;
        heap.emplace(nd, e.from);
      }
    }
  }
}

std::optional<Path> DistanceTree::path_from(NodeIndex i) const {
  if (!reachable(i)) return std::nullopt;
  Path path;
  path.nodes.push_back(i);
  NodeIndex u = i;
  while (u != target_) {
    std::uint32_t chosen = 0;
    NodeIndex next = kNoNode;
    for (auto k : graph_->out_edges(u)) {
      const auto& e = graph_->edges()[k];
      if (!reachable(e.to)) continue;
      const double s = e.km + dist_[e.to] - dist_[u];
      const bool tight = s <= kTightEps * std::max(1.0, dist_[u]);
      if (!tight) continue;
      // Smallest next junction; among parallel edges the shortest, then lowest index.
      if (next == kNoNode || e.to < next ||
          (e.to == next && (e.km < graph_->edges()[chosen].km ||
                            (e.km == graph_->edges()[chosen].km && k < chosen)))) {
        next = e.to;
        chosen = k;
      }
    }
    if (next == kNoNode) return std::nullopt;
    path.edges.push_back(chosen);
    path.nodes.push_back(next);
    path.km += graph_->edges()[chosen].km;
    u = next;
  }
  return path;
}

Path shortest_path(const RoadGraph& graph, NodeIndex i, NodeIndex j) {
  if (i == j) return Path{{i}, {}, 0.0};
  DistanceTree tree(graph, j);
  auto p = tree.path_from(i);
  if (!p) {
    throw NoPathError("no path from junction " + std::to_string(graph.junction(i).id) + " to " +
                      std::to_string(graph.junction(j).id));
  }
  return std::move(*p);
}

// ---------------------------------------------------------------------------

SpeedNetwork::SpeedNetwork(RoadGraph graph, SpeedConfig config)
    : graph_(std::move(graph)), config_(config) {
  HourlySpeeds fill;
  fill.fill(config_.default_kmh);
  speeds_.assign(graph_.edges().size(), fill);
}

void SpeedNetwork::set_idling_ratios(const std::array<double, kHoursPerDay>& r) {
  for (double v : r) {
    if (!(v >= 0.0 && v < 1.0)) throw DataError("idling ratio must lie in [0, 1)");
  }
  idling_ = r;
}

double SpeedNetwork::mean_speed_kmh(int hour) const {
  double len = 0.0, weighted = 0.0;
  const auto& edges = graph_.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    len += edges[k].km;
    weighted += edges[k].km * speeds_[k][hour];
  }
  return len > 0.0 ? weighted / len : config_.default_kmh;
}

double SpeedNetwork::driving_minutes(const Path& path, int hour) const {
  double minutes = 0.0;
  for (auto k : path.edges) minutes += graph_.edges()[k].km / speeds_[k][hour] * 60.0;
  return minutes;
}

TravelEstimate SpeedNetwork::travel(const Path& path, int minute) const {
  TravelEstimate est;
  if (path.edges.empty()) return est;
  const int hour = (minute / 60) % kHoursPerDay;
  const double lambda = idling_[hour];
  est.distance_km = path.km;
  est.driving_min = driving_minutes(path, hour);
  est.idling_min = est.driving_min * lambda / (1.0 - lambda);
  est.total_min = est.driving_min + est.idling_min;
  est.slots = std::max(1, static_cast<int>(std::ceil(est.total_min - 1e-9)));
  return est;
}

TravelEstimate SpeedNetwork::travel_time(NodeIndex i, NodeIndex j, int minute) const {
  return travel(shortest_path(graph_, i, j), minute);
}

SpeedNetwork label_segment_speeds(RoadGraph graph, std::span<const SpeedSample> samples,
                                  SpeedConfig config) {
  SpeedNetwork net(std::move(graph), config);
  const auto& g = net.graph();
  std::vector<std::array<double, kHoursPerDay>> best(g.edges().size());
  for (auto& b : best) b.fill(-1.0);

  std::unordered_map<NodeIndex, std::vector<std::size_t>> by_dest;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.origin == s.dest || !(s.duration_min > 0.0)) continue;
    by_dest[s.dest].push_back(k);
  }
  for (const auto& [dest, idx] : by_dest) {
    DistanceTree tree(g, dest);
    for (auto k : idx) {
      const auto& s = samples[k];
      auto path = tree.path_from(s.origin);
      if (!path) continue;
      const double v = std::min(config.cap_kmh, s.distance_km / (s.duration_min / 60.0));
      if (!(v > 0.0)) continue;
      for (auto e : path->edges) {
        best[e][s.pickup_hour] = std::max(best[e][s.pickup_hour], v);
      }
    }
  }
  for (std::uint32_t e = 0; e < best.size(); ++e) {
    for (int h = 0; h < kHoursPerDay; ++h) {
      if (best[e][h] > 0.0) net.set_speed(e, h, best[e][h]);
    }
  }
  return net;
}

double idling_ratio(double total_min, double driving_min) {
  if (!(total_min > 0.0)) return 0.0;
  const double r = (total_min - driving_min) / total_min;
  return std::clamp(r, 0.0, std::nextafter(1.0, 0.0));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::array<double, kHoursPerDay> fill_nearest_hour(
    const std::array<std::optional<double>, kHoursPerDay>& values, double fallback) {
  std::array<double, kHoursPerDay> out;
  for (int h = 0; h < kHoursPerDay; ++h) {
    out[h] = fallback;
    for (int d = 0; d <= kHoursPerDay / 2; ++d) {
      const int before = (h - d + kHoursPerDay) % kHoursPerDay;
      const int after = (h + d) % kHoursPerDay;
      if (values[before]) {
        out[h] = *values[before];
        break;
      }
      if (values[after]) {
        out[h] = *values[after];
        break;
      }
    }
  }
  return out;
}

std::array<double, kHoursPerDay> idling_ratio_stats(const SpeedNetwork& network,
                                                    std::span<const SpeedSample> samples) {
  const auto& g = network.graph();
  std::array<std::vector<double>, kHoursPerDay> ratios;
  std::unordered_map<NodeIndex, std::vector<std::size_t>> by_dest;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].origin != samples[k].dest) by_dest[samples[k].dest].push_back(k);
  }
  for (const auto& [dest, idx] : by_dest) {
    DistanceTree tree(g, dest);
    for (auto k : idx) {
      const auto& s = samples[k];
      auto path = tree.path_from(s.origin);
      if (!path) continue;
      ratios[s.pickup_hour].push_back(
          idling_ratio(s.duration_min, network.driving_minutes(*path, s.pickup_hour)));
    }
  }
  std::array<std::optional<double>, kHoursPerDay> med;
  for (int h = 0; h < kHoursPerDay; ++h) {
    if (!ratios[h].empty()) med[h] = median(std::move(ratios[h]));
  }
  return fill_nearest_hour(med, 0.0);
}

// ---------------------------------------------------------------------------

StationTable::StationTable(const RoadGraph& graph, std::vector<ChargingStation> stations)
    : stations_(std::move(stations)) {
  if (stations_.empty()) throw ConfigError("no charging stations configured");
  for (const auto& s : stations_) {
    if (s.junction >= graph.size()) {
      throw DataError("charging station " + s.id + " is not attached to a junction");
    }
  }
  // Multi-source reverse Dijkstra with lexicographic (distance, station) labels.
  nearest_.assign(graph.size(), NearestStation{});
  using Item = std::tuple<double, int, NodeIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  auto better = [](double d, int s, const NearestStation& cur) {
    return d < cur.km || (d == cur.km && (cur.station < 0 || s < cur.station));
  };
  for (int s = 0; s < static_cast<int>(stations_.size()); ++s) {
    const NodeIndex j = stations_[s].junction;
    if (better(0.0, s, nearest_[j])) {
      nearest_[j] = {s, 0.0};
      heap.emplace(0.0, s, j);
    }
  }
  while (!heap.empty()) {
    auto [d, s, v] = heap.top();
    heap.pop();
    if (nearest_[v].km != d || nearest_[v].station != s) continue;
    for (auto k : graph.in_edges(v)) {
      const auto& e = graph.edges()[k];
      const double nd = d + e.km;
      if (better(nd, s, nearest_[e.from])) {
        nearest_[e.from] = {s, nd};
        heap.emplace(nd, s, e.from);
      }
    }
  }
}

std::optional<Path> StationTable::path_to_nearest(const RoadGraph& graph, NodeIndex i) const {
  const auto& n = nearest_[i];
  if (!n.reachable()) return std::nullopt;
  const NodeIndex target = stations_[n.station].junction;
  if (target == i) return Path{{i}, {}, 0.0};
  return DistanceTree(graph, target).path_from(i);
}

std::string to_string(ChargeMode m) { return m == ChargeMode::Mode3 ? "mode3" : "fast_dc"; }

ChargeMode parse_charge_mode(std::string_view s) {
  if (s == "mode3" || s == "Mode3") return ChargeMode::Mode3;
  if (s == "fast_dc" || s == "FastDC" || s == "fast") return ChargeMode::FastDC;
  throw ConfigError("unknown charging mode: " + std::string(s));
}

}  // namespace etaxi
