#include "etaxi/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "etaxi/csv.hpp"

namespace etaxi {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(std::string_view bytes) { return hash_hex(fnv1a64(bytes)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

json read_json_file(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

ojson graph_to_json(const RoadGraph& graph) {
  ojson j;
  ojson js = ojson::array();
  for (const auto& n : graph.junctions()) {
    js.push_back({{"id", n.id}, {"lat", n.pos.lat}, {"lon", n.pos.lon}});
  }
  ojson es = ojson::array();
  for (const auto& e : graph.edges()) {
    es.push_back({{"from", graph.junction(e.from).id}, {"to", graph.junction(e.to).id},
                  {"km", e.km}});
  }
  j["junctions"] = std::move(js);
  j["edges"] = std::move(es);
  return j;
}

RoadGraph graph_from_json(const json& j) {
  try {
    std::vector<Junction> junctions;
    for (const auto& n : j.at("junctions")) {
      junctions.push_back({n.at("id").get<JunctionId>(),
                           {n.at("lat").get<double>(), n.at("lon").get<double>()}});
    }
    std::vector<EdgeSpec> edges;
    for (const auto& e : j.at("edges")) {
      edges.push_back(
          {e.at("from").get<JunctionId>(), e.at("to").get<JunctionId>(), e.at("km").get<double>()});
    }
    return RoadGraph(std::move(junctions), edges);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("graph JSON: ") + e.what());
  }
}

namespace {

std::size_t need(const csv::Reader& r, const char* name, const char* what) {
  auto c = r.column(name);
  if (!c) throw SchemaError(std::string(what) + " is missing column '" + name + "'");
  return *c;
}

}  // namespace

RoadGraph graph_from_csv(std::istream& nodes, std::istream& edges) {
  csv::Reader nr(nodes);
  if (!nr.read_header()) throw SchemaError("junction CSV is empty");
  const auto c_id = need(nr, "id", "junction CSV"), c_lat = need(nr, "lat", "junction CSV"),
             c_lon = need(nr, "lon", "junction CSV");
  std::vector<Junction> junctions;
  std::vector<std::string> f;
  while (nr.next(f)) {
    const auto id = csv::to_int(f.at(c_id));
    const auto lat = csv::to_double(f.at(c_lat));
    const auto lon = csv::to_double(f.at(c_lon));
    if (!id || !lat || !lon) {
      throw DataError("bad junction row at line " + std::to_string(nr.line_number()));
    }
    junctions.push_back({*id, {*lat, *lon}});
  }
  csv::Reader er(edges);
  if (!er.read_header()) throw SchemaError("edge CSV is empty");
  const auto c_from = need(er, "from", "edge CSV"), c_to = need(er, "to", "edge CSV"),
             c_km = need(er, "km", "edge CSV");
  std::vector<EdgeSpec> specs;
  while (er.next(f)) {
    const auto a = csv::to_int(f.at(c_from));
    const auto b = csv::to_int(f.at(c_to));
    const auto km = csv::to_double(f.at(c_km));
    if (!a || !b || !km) throw DataError("bad edge row at line " + std::to_string(er.line_number()));
    specs.push_back({*a, *b, *km});
  }
  return RoadGraph(std::move(junctions), specs);
}

RoadGraph load_graph(const fs::path& path) {
  if (path.extension() == ".json") return graph_from_json(read_json_file(path));
  const fs::path edges = path.parent_path() / (path.stem().string() + "_edges.csv");
  std::ifstream n(path), e(edges);
  if (!n) throw IoError("cannot open " + path.string());
  if (!e) throw IoError("cannot open " + edges.string());
  return graph_from_csv(n, e);
}

std::vector<ChargingStation> read_stations_csv(std::istream& in, const RoadGraph& graph,
                                               double max_snap_km) {
  csv::Reader r(in);
  if (!r.read_header()) throw SchemaError("stations CSV is empty");
  const auto c_id = need(r, "id", "stations CSV"), c_lat = need(r, "lat", "stations CSV"),
             c_lon = need(r, "lon", "stations CSV"), c_modes = need(r, "modes", "stations CSV");
  std::vector<ChargingStation> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    const auto lat = csv::to_double(f.at(c_lat));
    const auto lon = csv::to_double(f.at(c_lon));
    if (!lat || !lon || f.at(c_id).empty()) {
      throw DataError("bad station row at line " + std::to_string(r.line_number()));
    }
    ChargingStation s;
    s.id = f[c_id];
    s.pos = {*lat, *lon};
    s.mode3 = s.fast_dc = false;
    std::string_view modes = f.at(c_modes);
    while (!modes.empty()) {
      const auto cut = modes.find(';');
      const auto m = modes.substr(0, cut);
      if (m == "mode3") s.mode3 = true;
      else if (m == "fast_dc") s.fast_dc = true;
      else throw DataError("unknown charging mode '" + std::string(m) + "'");
      modes = cut == std::string_view::npos ? std::string_view{} : modes.substr(cut + 1);
    }
    const auto j = graph.snap(s.pos, max_snap_km);
    if (!j) throw DataError("station " + s.id + " is too far from the road network");
    s.junction = *j;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

ojson network_to_json(const SpeedNetwork& net) {
  ojson j;
  j["format"] = "etaxi-network/1";
  j["default_kmh"] = net.config().default_kmh;
  j["cap_kmh"] = net.config().cap_kmh;
  j["idling_ratio"] = net.idling_ratios();
  j["graph"] = graph_to_json(net.graph());
  ojson speeds = ojson::array();
  for (const auto& row : net.speeds()) speeds.push_back(row);
  j["edge_speeds_kmh"] = std::move(speeds);
  return j;
}

SpeedNetwork network_from_json(const json& j) {
  try {
    SpeedConfig cfg{j.at("default_kmh").get<double>(), j.at("cap_kmh").get<double>()};
    SpeedNetwork net(graph_from_json(j.at("graph")), cfg);
    const auto& speeds = j.at("edge_speeds_kmh");
    if (speeds.size() != net.graph().edges().size()) {
      throw DataError("speed table does not match the edge list");
    }
    for (std::uint32_t e = 0; e < speeds.size(); ++e) {
      const auto row = speeds[e].get<SpeedNetwork::HourlySpeeds>();
      for (int h = 0; h < kHoursPerDay; ++h) {
        if (!(row[h] > 0.0)) throw DataError("non-positive segment speed");
        net.set_speed(e, h, row[h]);
      }
    }
    net.set_idling_ratios(j.at("idling_ratio").get<std::array<double, kHoursPerDay>>());
    return net;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("network JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void mix(std::uint64_t& h, const T& v) {
  h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
}

template <class T>
void mix_all(std::uint64_t& h, const std::vector<T>& v) {
  mix(h, v.size());
  for (const auto& x : v) mix(h, x);
}

}  // namespace

std::string instance_hash(const MdpInstance& m) {
  std::uint64_t h = fnv1a64("etaxi-instance/1");
  for (int v : {m.horizon, m.start_clock_min, m.step_minutes, m.slot_minutes, m.n_slots, m.n_nodes,
                m.n_bins, static_cast<int>(m.battery_limited), static_cast<int>(m.unpriced_trip_energy)}) {
    mix(h, v);
  }
  for (double v : {m.bin_kwh, m.battery_low_kwh, m.charge_rate_kw, m.usd_per_kwh}) mix(h, v);
  mix_all(h, m.tau_set);
  mix_all(h, m.node_ids);
  for (const auto& row : m.targets) mix_all(h, row);
  mix_all(h, m.travel_min);
  mix_all(h, m.energy_kwh);
  mix_all(h, m.distance_km);
  mix_all(h, m.gross_fare);
  mix_all(h, m.station_of);
  mix_all(h, m.to_station_min);
  mix_all(h, m.to_station_kwh);
  mix_all(h, m.to_station_km);
  mix_all(h, m.from_station_min);
  mix_all(h, m.from_station_kwh);
  mix_all(h, m.from_station_km);
  mix_all(h, m.pickup_prob);
  mix_all(h, m.pickup_count);
  mix_all(h, m.competitor_count);
  for (const auto& row : m.dest) {
    mix(h, row.size());
    for (const auto& d : row) {
      mix(h, d.node);
      mix(h, d.prob);
    }
  }
  return hash_hex(h);
}

void write_values_csv(std::ostream& out, const Solution& sol) {
  const auto& m = sol.instance();
  out << "t,junction,bin,value,target_junction,charge_min\n";
  for (int t = 0; t < m.horizon; ++t) {
    for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
      for (int b = 0; b < m.n_bins; ++b) {
        out << t << ',' << m.node_ids[i] << ',' << b << ',';
        if (sol.dead(t, i, b)) {
          out << "-inf,,\n";
          continue;
        }
        const auto a = *sol.best_action(t, i, b);
        out << csv::format_double(sol.value(t, i, b)) << ',' << m.node_ids[a.target] << ','
            << a.tau_min << '\n';
      }
    }
  }
}

std::vector<double> read_values_csv(std::istream& in, const MdpInstance& m) {
  csv::Reader r(in);
  if (!r.read_header()) throw SchemaError("value table is empty");
  const auto c_t = need(r, "t", "value table"), c_j = need(r, "junction", "value table"),
             c_b = need(r, "bin", "value table"), c_v = need(r, "value", "value table");
  const std::size_t n_states =
      static_cast<std::size_t>(m.horizon) * m.n_nodes * static_cast<std::size_t>(m.n_bins);
  std::vector<double> values;
  values.reserve(n_states);
  std::vector<std::string> f;
  while (r.next(f)) {
    const std::size_t k = values.size();
    const auto t = csv::to_int(f.at(c_t));
    const auto j = csv::to_int(f.at(c_j));
    const auto b = csv::to_int(f.at(c_b));
    const int want_b = static_cast<int>(k % m.n_bins);
    const auto want_i = (k / m.n_bins) % m.n_nodes;
    const int want_t = static_cast<int>(k / m.n_bins / m.n_nodes);
    if (k >= n_states || !t || !j || !b || *t != want_t || *b != want_b ||
        *j != m.node_ids[want_i]) {
      throw DataError("value table row " + std::to_string(r.line_number()) +
                      " does not match the solver instance");
    }
    if (f.at(c_v) == "-inf") {
      values.push_back(Solution::kDead);
    } else {
      const auto v = csv::to_double(f[c_v]);
      if (!v) throw DataError("bad value at line " + std::to_string(r.line_number()));
      values.push_back(*v);
    }
  }
  if (values.size() != n_states) throw DataError("value table is truncated");
  return values;
}

}  // namespace etaxi
