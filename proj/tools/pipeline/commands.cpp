#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "etaxi/artifacts.hpp"

namespace etaxi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kTripStore = "trip_store.csv";
constexpr const char* kIngestReport = "ingest_report.json";
constexpr const char* kNetwork = "network.json";

/// First line of a CSV artifact: "# <format> key=value ...".
std::string tag_line(const std::string& format, const std::map<std::string, std::string>& tags) {
  std::string s = "# " + format;
  for (const auto& [k, v] : tags) s += " " + k + "=" + v;
  return s + "\n";
}

std::map<std::string, std::string> read_tags(const std::string& text, const std::string& format) {
  const auto eol = text.find('\n');
  std::istringstream line(text.substr(0, eol));
  std::string word;
  line >> word;
  if (word != "#" || !(line >> word) || word != format) {
    throw DataError("not a " + format + " artifact");
  }
  std::map<std::string, std::string> tags;
  while (line >> word) {
    const auto eq = word.find('=');
    if (eq != std::string::npos) tags[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return tags;
}

std::string require_artifact(const RunConfig& config, const std::string& name,
                             const char* producer) {
  const auto p = config.output(name);
  if (!fs::exists(p)) {
    throw IoError(p.string() + " not found; run `etaxi " + std::string(producer) + "` first");
  }
  return read_file(p);
}

void expect_hash(const std::string& what, const std::string& recorded, const std::string& actual) {
  if (recorded != actual) {
    throw DataError(what + " hash mismatch (recorded " + recorded + ", found " + actual +
                    "); rerun the upstream stage");
  }
}

json parse_artifact(const std::string& text, const std::string& name) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError(name + " is not valid JSON");
  return j;
}

std::string get_tag(const json& j, const char* key) {
  try {
    return j.at("inputs").at(key).get<std::string>();
  } catch (const json::exception&) {
    throw DataError(std::string("artifact lacks the ") + key + " hash");
  }
}

std::vector<SnappedTrip> load_trip_store(const RunConfig& config, const RoadGraph& graph,
                                         std::string* hash) {
  const auto text = require_artifact(config, kTripStore, "ingest");
  if (hash) *hash = content_hash(text);
  std::istringstream in(text);
  return read_trip_store(in, graph);
}

void ensure_output_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir(), ec);
  if (ec) throw IoError("cannot create " + config.output_dir().string() + ": " + ec.message());
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace

// ---------------------------------------------------------------------------

void cmd_ingest(const RunConfig& config) {
  const auto trips_path = config.require_input("trips");
  const auto graph_path = config.require_input("graph");
  ensure_output_dir(config);
  const auto graph_text = read_file(graph_path);
  const auto trips_text = read_file(trips_path);
  const auto graph = load_graph(graph_path);

  std::istringstream trips_in(trips_text);
  auto parsed = parse_trips(trips_in, {}, config.bbox());
  auto result = snap_and_filter(parsed.trips, graph, config.ingest(), std::move(parsed.report));
  spdlog::info("ingest: {} rows, {} kept", result.report.total, result.report.kept);

  const std::map<std::string, std::string> tags{{"config", config.stage_hash("ingest")},
                                                {"graph", content_hash(graph_text)},
                                                {"trips", content_hash(trips_text)}};
  std::ostringstream store;
  store << tag_line("etaxi-trip-store/1", tags);
  write_trip_store(store, result.trips, graph);
  write_file(config.output(kTripStore), store.str());

  ojson report;
  report["format"] = "etaxi-ingest-report/1";
  report["config_hash"] = tags.at("config");
  report["inputs"] = {{"graph", tags.at("graph")}, {"trips", tags.at("trips")}};
  report["trip_store_hash"] = content_hash(store.str());
  const auto counts = result.report.to_json();
  for (const auto& [k, v] : counts.items()) report[k] = v;
  write_file(config.output(kIngestReport), dump(report));
}

void cmd_build_network(const RunConfig& config) {
  const auto graph_path = config.require_input("graph");
  const auto graph_text = read_file(graph_path);
  auto graph = load_graph(graph_path);
  const auto store_text = require_artifact(config, kTripStore, "ingest");
  expect_hash("road graph", read_tags(store_text, "etaxi-trip-store/1")["graph"],
              content_hash(graph_text));
  std::istringstream store_in(store_text);
  const auto trips = read_trip_store(store_in, graph);
  const auto samples = to_speed_samples(trips);

  auto net = label_segment_speeds(std::move(graph), samples, config.speed());
  net.set_idling_ratios(idling_ratio_stats(net, samples));
  spdlog::info("build-network: {} junctions, {} edges, {} speed samples", net.graph().size(),
               net.graph().edges().size(), samples.size());

  ojson j = network_to_json(net);
  ojson out;
  out["format"] = j["format"];
  out["config_hash"] = config.stage_hash("build-network");
  out["inputs"] = {{"graph", content_hash(graph_text)}, {"trip_store", content_hash(store_text)}};
  for (const auto& [k, v] : j.items()) {
    if (k != "format") out[k] = v;
  }
  write_file(config.output(kNetwork), dump(out));
}

void cmd_estimate(const RunConfig& config) {
  const auto net_text = require_artifact(config, kNetwork, "build-network");
  const auto net_json = parse_artifact(net_text, kNetwork);
  const auto net = network_from_json(net_json);
  std::string store_hash;
  const auto trips = load_trip_store(config, net.graph(), &store_hash);
  expect_hash("trip store", get_tag(net_json, "trip_store"), store_hash);

  const auto model = estimate_demand(trips, net, config.estimation());
  std::size_t rows = 0;
  for (const auto& r : model.dest) rows += !r.empty();
  spdlog::info("estimate: {} trips, {} populated destination rows", trips.size(), rows);

  ojson out;
  out["format"] = "etaxi-demand/1";
  out["config_hash"] = config.stage_hash("estimate");
  out["inputs"] = {{"network", content_hash(net_text)}, {"trip_store", store_hash}};
  const auto tables = demand_to_json(model, net.graph());
  for (const auto& [k, v] : tables.items()) out[k] = v;
  write_file(config.output(config.demand_file()), dump(out));
}

// ---------------------------------------------------------------------------

LoadedModels load_models(const RunConfig& config) {
  LoadedModels m;
  const auto net_text = require_artifact(config, kNetwork, "build-network");
  m.network_hash = content_hash(net_text);
  m.network = network_from_json(parse_artifact(net_text, kNetwork));
  const auto demand_text = require_artifact(config, config.demand_file(), "estimate");
  m.demand_hash = content_hash(demand_text);
  const auto demand_json = parse_artifact(demand_text, config.demand_file());
  expect_hash("network", get_tag(demand_json, "network"), m.network_hash);
  m.demand = demand_from_json(demand_json, m.network.graph());
  if (config.powertrain() == Powertrain::Electric) {
    const auto path = config.require_input("stations");
    const auto text = read_file(path);
    m.stations_hash = content_hash(text);
    std::istringstream in(text);
    auto all = read_stations_csv(in, m.network.graph(), config.ingest().max_snap_km);
    const auto mode = config.charging().mode;
    std::vector<ChargingStation> usable;
    for (auto& s : all) {
      if (s.supports(mode)) usable.push_back(std::move(s));
    }
    if (usable.empty()) throw ConfigError("no charging station supports " + to_string(mode));
    m.stations.emplace(m.network.graph(), std::move(usable));
  }
  return m;
}

MdpInstance compile(const RunConfig& config, const LoadedModels& models) {
  ModelInputs in{&models.network,
                 models.stations ? &*models.stations : nullptr,
                 &models.demand,
                 config.energy(),
                 config.battery(),
                 config.charging(),
                 config.tariff(),
                 config.price()};
  return compile_instance(in, config.solver());
}

StartState start_state(const RunConfig& config, const MdpInstance& m, const LoadedModels& models) {
  const auto& sim = config.data()["simulation"];
  NodeIndex node = 0;
  if (sim["start_junction"].is_null()) {
    std::uint64_t best = 0;
    for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
      const auto g = *models.network.graph().index_of(m.node_ids[i]);
      if (models.demand.pickups_total[g] > best) {
        best = models.demand.pickups_total[g];
        node = i;
      }
    }
  } else {
    const auto id = sim["start_junction"].get<JunctionId>();
    const auto it = std::find(m.node_ids.begin(), m.node_ids.end(), id);
    if (it == m.node_ids.end()) {
      throw ConfigError("start junction " + std::to_string(id) + " is not a solver node");
    }
    node = static_cast<NodeIndex>(it - m.node_ids.begin());
  }
  int bin = 0;
  if (m.battery_limited) {
    const auto battery = config.battery();
    const double frac = sim["start_soc_fraction"].get<double>();
    const double level = std::clamp(frac * battery.capacity_kwh, battery.low(), battery.high());
    bin = std::clamp(m.bin_of_level(level), 0, m.n_bins - 1);
  }
  return {node, 0, bin};
}

SolveSummary cmd_solve(const RunConfig& config) {
  const auto models = load_models(config);
  auto inst = std::make_shared<MdpInstance>(compile(config, models));
  const auto ihash = instance_hash(*inst);
  spdlog::info("solve: {} nodes, {} bins, {} steps, {} charging options", inst->n_nodes,
               inst->n_bins, inst->horizon, inst->n_tau());
  const auto sol = solve_backward(inst, {config.threads()});

  const auto sfx = config.suffix();
  const std::string values_name = "values" + sfx + ".csv";
  std::ostringstream values;
  values << tag_line("etaxi-values/1",
                     {{"config", config.stage_hash("solve")}, {"instance", ihash}});
  write_values_csv(values, sol);
  write_file(config.output(values_name), values.str());

  SolveSummary s;
  s.start = start_state(config, *inst, models);
  s.instance_hash = ihash;
  s.start_value = inst->horizon > 0 ? sol.value(0, s.start.node, s.start.bin) : 0.0;

  ojson p;
  p["format"] = "etaxi-policy/1";
  p["config_hash"] = config.stage_hash("solve");
  p["inputs"] = {{"network", models.network_hash},
                 {"demand", models.demand_hash},
                 {"stations", models.stations_hash}};
  p["instance_hash"] = ihash;
  p["values_file"] = values_name;
  p["values_hash"] = content_hash(values.str());
  p["powertrain"] = to_string(inst->battery_limited ? Powertrain::Electric : Powertrain::ICE);
  p["unpriced_trip_energy"] = inst->unpriced_trip_energy;
  p["horizon_steps"] = inst->horizon;
  p["start_clock_min"] = inst->start_clock_min;
  p["n_bins"] = inst->n_bins;
  p["bin_kwh"] = inst->bin_kwh;
  p["battery_low_kwh"] = inst->battery_low_kwh;
  p["tau_set_min"] = inst->tau_set;
  p["usd_per_kwh"] = inst->usd_per_kwh;
  p["solver_junctions"] = inst->node_ids;
  std::size_t dead = 0;
  for (double v : sol.values()) dead += v == Solution::kDead;
  p["dead_states"] = dead;
  p["start"] = {{"junction", inst->node_ids.empty() ? 0 : inst->node_ids[s.start.node]},
                {"bin", s.start.bin},
                {"value_usd", s.start_value}};
  s.policy_file = config.output("policy" + sfx + ".json");
  write_file(s.policy_file, dump(p));
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct LoadedPolicy {
  LoadedModels models;
  std::shared_ptr<const MdpInstance> instance;
  std::optional<Solution> solution;
  std::string policy_hash;
  StartState start;
};

LoadedPolicy load_policy(const RunConfig& config) {
  const auto sfx = config.suffix();
  const std::string name = "policy" + sfx + ".json";
  const auto text = require_artifact(config, name, "solve");
  const auto p = parse_artifact(text, name);
  if (p.value("config_hash", "") != config.stage_hash("solve")) {
    throw DataError(name + " was solved with a different configuration; rerun `etaxi solve`");
  }
  LoadedPolicy lp;
  lp.policy_hash = content_hash(text);
  lp.models = load_models(config);
  expect_hash("network", get_tag(p, "network"), lp.models.network_hash);
  expect_hash("demand model", get_tag(p, "demand"), lp.models.demand_hash);
  expect_hash("stations", get_tag(p, "stations"), lp.models.stations_hash);
  auto inst = std::make_shared<MdpInstance>(compile(config, lp.models));
  expect_hash("solver instance", p.value("instance_hash", ""), instance_hash(*inst));
  const auto values_name = p.value("values_file", "values" + sfx + ".csv");
  const auto values_text = require_artifact(config, values_name, "solve");
  expect_hash("value table", p.value("values_hash", ""), content_hash(values_text));
  std::istringstream in(values_text);
  auto values = read_values_csv(in, *inst);
  lp.instance = inst;
  lp.solution.emplace(solution_from_values(inst, std::move(values), {config.threads()}));
  lp.start = start_state(config, *inst, lp.models);
  return lp;
}

std::vector<StartState> start_pool(const MdpInstance& m, const RoadGraph& graph,
                                   std::span<const SnappedTrip> trips, const StartState& start) {
  std::vector<NodeIndex> node_of(graph.size());
  for (NodeIndex g = 0; g < graph.size(); ++g) {
    double best = kInf;
    for (NodeIndex i = 0; i < static_cast<NodeIndex>(m.n_nodes); ++i) {
      const double d =
          haversine_km(graph.junction(g).pos, graph.junction(*graph.index_of(m.node_ids[i])).pos);
      if (d < best) {
        best = d;
        node_of[g] = i;
      }
    }
  }
  const int clock = m.start_clock_min;
  std::map<std::pair<std::string, WallMinute>, const SnappedTrip*> first;
  for (const auto& t : trips) {
    const WallMinute s = shift_start(t.pickup_time);
    if (minute_of_day(s) != clock) continue;
    auto& slot = first[{t.taxi_id, s}];
    if (!slot || t.pickup_time < slot->pickup_time) slot = &t;
  }
  std::vector<StartState> pool;
  for (const auto& [_, t] : first) pool.push_back({node_of[t->origin], 0, start.bin});
  return pool;
}

}  // namespace

SimulateSummary cmd_simulate(const RunConfig& config) {
  auto lp = load_policy(config);
  const auto& m = *lp.instance;
  const auto& sim = config.data()["simulation"];
  const auto seed = sim["seed"].get<std::uint64_t>();
  const auto n_taxis = sim["n_taxis"].get<std::size_t>();
  const auto sfx = config.suffix();

  SimulateSummary out;
  out.dp_value = m.horizon > 0 ? lp.solution->value(0, lp.start.node, lp.start.bin) : 0.0;
  std::vector<ShiftResult> results;
  ojson fleet_info;
  if (n_taxis == 1) {
    results = rollout_batch(*lp.solution, lp.start, sim["n_rollouts"].get<std::size_t>(), seed,
                            config.threads());
  } else {
    FleetConfig fc;
    fc.n_taxis = n_taxis;
    fc.seed = seed;
    fc.start = lp.start;
    const auto& cap = sim["capacity"];
    const auto trips = load_trip_store(config, lp.models.network.graph(), nullptr);
    fc.start_pool = start_pool(m, lp.models.network.graph(), trips, lp.start);
    if (cap == "data") {
      const auto per_junction = junction_capacity_from_data(
          trips, lp.models.network.graph().size(), sim["max_presence_gap_min"].get<double>());
      fc.capacity = node_capacities(m, lp.models.network.graph(), per_junction);
    } else if (cap.is_number_integer()) {
      fc.capacity.assign(m.n_nodes, cap.get<int>());
    }
    const auto fleet = rollout_fleet(*lp.solution, fc);
    results = fleet.taxis;
    fleet_info = {{"n_taxis", n_taxis},
                  {"capacity_violations", fleet.capacity_violations},
                  {"blocked_stalls", fleet.blocked_stalls},
                  {"peak_occupancy", fleet.peak_occupancy},
                  {"capacity", fc.capacity}};
  }

  std::ostringstream csv_out;
  csv_out << tag_line("etaxi-results/1",
                      {{"config", config.stage_hash("simulate")}, {"policy", lp.policy_hash}});
  write_results_csv(csv_out, results, m);
  out.results_file = config.output("results" + sfx + ".csv");
  write_file(out.results_file, csv_out.str());

  const auto powertrain = m.battery_limited ? Powertrain::Electric : Powertrain::ICE;
  auto summary = results_summary(results, m, powertrain);
  out.mean_net_revenue = summary["net_revenue"]["mean"].get<double>();
  out.std_error = summary["net_revenue"]["std_error"].get<double>();
  ojson j;
  j["format"] = "etaxi-summary/1";
  j["config_hash"] = config.stage_hash("simulate");
  j["inputs"] = {{"policy", lp.policy_hash}, {"results", content_hash(csv_out.str())}};
  j["seed"] = seed;
  j["start"] = {{"junction", m.node_ids[lp.start.node]}, {"bin", lp.start.bin}};
  j["dp_value_usd"] = out.dp_value;
  for (const auto& [k, v] : summary.items()) j[k] = v;
  if (!fleet_info.is_null()) j["fleet"] = fleet_info;
  out.summary_file = config.output("summary" + sfx + ".json");
  write_file(out.summary_file, dump(j));
  spdlog::info("simulate: {} shifts, mean net revenue {:.4f} (se {:.4f}), DP value {:.4f}",
               results.size(), out.mean_net_revenue, out.std_error, out.dp_value);
  return out;
}

void cmd_report(const RunConfig& config) {
  const auto sfx = config.suffix();
  const std::string name = "summary" + sfx + ".json";
  const auto text = require_artifact(config, name, "simulate");
  const auto summary = parse_artifact(text, name);
  const auto policy_text = require_artifact(config, "policy" + sfx + ".json", "solve");
  expect_hash("policy", get_tag(summary, "policy"), content_hash(policy_text));

  ojson r;
  r["format"] = "etaxi-report/1";
  r["inputs"] = {{"summary", content_hash(text)}, {"policy", content_hash(policy_text)}};
  for (const char* key : {"powertrain", "shifts", "dp_value_usd", "net_revenue", "totals",
                          "energy", "emissions", "safety", "fleet"}) {
    if (summary.contains(key)) r[key] = summary[key];
  }
  if (config.powertrain() == Powertrain::ICE) {
    const auto models = load_models(config);
    const auto m = compile(config, models);
    const auto start = start_state(config, m, models);
    const auto& sim = config.data()["simulation"];
    const auto prices = sim["gas_prices"].get<std::vector<double>>();
    const auto rows = gas_price_sensitivity(
        m, prices, start, sim["n_rollouts"].get<std::size_t>(), sim["seed"].get<std::uint64_t>(),
        config.price().kwh_per_gallon, config.threads());
    ojson table = ojson::array();
    for (const auto& row : rows) {
      table.push_back({{"usd_per_gallon", row.usd_per_gallon},
                       {"dp_value_usd", row.dp_value},
                       {"mean_net_revenue_usd", row.mean_net_revenue},
                       {"std_error", row.std_error},
                       {"mean_gross_fare_usd", row.mean_gross_fare},
                       {"mean_fuel_cost_usd", row.mean_fuel_cost}});
    }
    r["gas_price_sensitivity"] = std::move(table);
  }
  write_file(config.output("report" + sfx + ".json"), dump(r));
}

// ---------------------------------------------------------------------------

void cmd_synth_demand(const fs::path& dir, const SyntheticCityConfig& cfg) {
  const auto city = generate_synthetic_city(cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "graph.json", dump(graph_to_json(city.graph)));
  std::ostringstream stations, trips;
  write_stations_csv(stations, city.stations);
  write_trips_csv(trips, city.trips, city.malformed_rows);
  write_file(dir / "stations.csv", stations.str());
  write_file(dir / "trips.csv", trips.str());
  write_file(dir / "holidays.csv", "date\n");

  ojson config;
  config["paths"] = {{"trips", "trips.csv"},
                     {"graph", "graph.json"},
                     {"stations", "stations.csv"},
                     {"holidays", "holidays.csv"},
                     {"output_dir", "out"}};
  config["solver"] = {{"horizon_min", 240}, {"aggregation_k", cfg.rows * cfg.cols}};
  config["simulation"] = {{"seed", 7}, {"n_rollouts", 1000}};
  write_file(dir / "config.json", dump(config));
  spdlog::info("synth-demand: {} junctions, {} trips, {} stations", city.graph.size(),
               city.trips.size(), city.stations.size());
}

}  // namespace etaxi::cli
