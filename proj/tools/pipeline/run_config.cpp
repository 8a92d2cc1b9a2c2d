#include "run_config.hpp"

#include <fstream>

#include "etaxi/artifacts.hpp"

namespace etaxi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

json default_config() {
  const Tariff t;
  const EnergyParams e;
  const Battery b;
  const EnergyPrice p;
  const SolverConfig s;
  return {
      {"paths",
       {{"trips", nullptr},
        {"graph", nullptr},
        {"stations", nullptr},
        {"holidays", nullptr},
        {"output_dir", "out"}}},
      {"ingest",
       {{"max_snap_km", kDefaultMaxSnapKm},
        {"discrepancy_km", kRouteDiscrepancyKm},
        {"bbox", nullptr}}},
      {"network", {{"default_kmh", 25.0}, {"cap_kmh", 110.0}}},
      {"estimation", {{"day_type", "weekday"}, {"max_gap_min", 120.0}, {"fallback_min", 10.0}}},
      {"tariff",
       {{"initial_charge", t.initial_charge},
        {"distance_rate", t.distance_rate},
        {"distance_unit_miles", t.distance_unit_miles},
        {"time_rate_per_min", t.time_rate_per_min},
        {"mta_surcharge", t.mta_surcharge},
        {"improvement_surcharge", t.improvement_surcharge},
        {"night_surcharge", t.night_surcharge},
        {"night_start_hour", t.night_start_hour},
        {"night_end_hour", t.night_end_hour},
        {"peak_surcharge", t.peak_surcharge},
        {"peak_start_hour", t.peak_start_hour},
        {"peak_end_hour", t.peak_end_hour},
        {"slow_speed_kmh", t.slow_speed_kmh}}},
      {"energy",
       {{"alpha1", e.alpha1},
        {"alpha2", e.alpha2},
        {"alpha3", e.alpha3},
        {"beta", e.beta},
        {"aux_load_kw", e.aux_load_kw}}},
      {"battery",
       {{"capacity_kwh", b.capacity_kwh},
        {"low_fraction", b.low_fraction},
        {"high_fraction", b.high_fraction}}},
      {"charging", {{"mode", "mode3"}, {"rate_kw", nullptr}}},
      {"price",
       {{"electricity_usd_per_kwh", p.electricity_usd_per_kwh},
        {"gasoline_usd_per_gallon", p.gasoline_usd_per_gallon},
        {"kwh_per_gallon", p.kwh_per_gallon}}},
      {"solver",
       {{"powertrain", "electric"},
        {"shift", "morning"},
        {"horizon_min", s.horizon_min},
        {"battery_bin_fraction", s.battery_bin_fraction},
        {"tau_set", s.tau_set},
        {"aggregation_k", s.aggregation_k},
        {"full_adjacency", s.full_adjacency},
        {"unpriced_trip_energy", s.unpriced_trip_energy},
        {"peak_eligible", s.peak_eligible},
        {"date", nullptr}}},
      {"simulation",
       {{"seed", 7},
        {"n_rollouts", 1000},
        {"n_taxis", 1},
        {"start_junction", nullptr},
        {"start_soc_fraction", 0.95},
        {"capacity", "none"},
        {"max_presence_gap_min", 120.0},
        {"gas_prices", {2.5, 3.5, 4.5}}}},
      {"runtime", {{"threads", 0}}},
      {"logging", {{"level", "info"}}},
  };
}

namespace {

// Null defaults accept any value; objects must match key by key.
void merge(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    auto it = base.find(key);
    if (it == base.end()) throw ConfigError("unknown config key '" + path + "'");
    if (it->is_object()) {
      merge(*it, value, path);
    } else {
      *it = value;
    }
  }
}

template <class T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + section + "." + key + "' has the wrong type");
  }
}

}  // namespace

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part =
        key.substr(dot == std::string::npos ? 0 : dot + 1, end - (dot == std::string::npos ? 0 : dot + 1));
    patch = json{{part, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge(config, patch, "");
}

RunConfig::RunConfig(json user, fs::path base_dir, std::span<const std::string> overrides)
    : data_(default_config()), base_(std::move(base_dir)) {
  if (!user.is_null()) merge(data_, user, "");
  for (const auto& o : overrides) apply_override(data_, o);
  // Parse everything once so that type errors surface before any work starts.
  ingest();
  bbox();
  speed();
  estimation();
  tariff().validate();
  energy().validate();
  battery().validate();
  charging();
  price().validate();
  solver().validate();
  if (threads() < 0) throw ConfigError("runtime.threads must be >= 0");
  const auto& sim = data_["simulation"];
  if (get<int>(data_, "simulation", "n_taxis") < 1) throw ConfigError("simulation.n_taxis must be >= 1");
  if (get<int>(data_, "simulation", "n_rollouts") < 1) {
    throw ConfigError("simulation.n_rollouts must be >= 1");
  }
  const auto& cap = sim["capacity"];
  if (!(cap == "none" || cap == "data" || (cap.is_number_integer() && cap.get<int>() >= 1))) {
    throw ConfigError("simulation.capacity must be \"none\", \"data\" or an integer >= 1");
  }
}

std::optional<fs::path> RunConfig::input(const char* key) const {
  const auto& v = data_["paths"][key];
  if (v.is_null() || (v.is_string() && v.get<std::string>().empty())) return std::nullopt;
  if (!v.is_string()) throw ConfigError(std::string("paths.") + key + " must be a string");
  fs::path p = v.get<std::string>();
  return p.is_absolute() ? p : base_ / p;
}

fs::path RunConfig::require_input(const char* key) const {
  auto p = input(key);
  if (!p) throw ConfigError(std::string("paths.") + key + " is not set");
  if (!fs::exists(*p)) throw IoError("input file not found: " + p->string());
  return *p;
}

fs::path RunConfig::output_dir() const {
  fs::path p = get<std::string>(data_, "paths", "output_dir");
  return p.is_absolute() ? p : base_ / p;
}

std::string RunConfig::stage_hash(std::string_view stage) const {
  static const std::map<std::string_view, std::vector<const char*>> sections{
      {"ingest", {"ingest"}},
      {"build-network", {"network"}},
      {"estimate", {"estimation"}},
      {"solve", {"tariff", "energy", "battery", "charging", "price", "solver"}},
      {"simulate", {"simulation"}},
  };
  const auto it = sections.find(stage);
  if (it == sections.end()) throw ConfigError("unknown stage " + std::string(stage));
  json subset = json::object();
  for (const char* s : it->second) subset[s] = data_[s];
  return content_hash(subset.dump());
}

IngestConfig RunConfig::ingest() const {
  IngestConfig c{get<double>(data_, "ingest", "max_snap_km"),
                 get<double>(data_, "ingest", "discrepancy_km")};
  if (!(c.max_snap_km > 0.0) || !(c.discrepancy_km >= 0.0)) {
    throw ConfigError("ingest tolerances must be positive");
  }
  return c;
}

BoundingBox RunConfig::bbox() const {
  const auto& b = data_["ingest"]["bbox"];
  if (b.is_null()) return {};
  if (!b.is_array() || b.size() != 4) {
    throw ConfigError("ingest.bbox must be [min_lat, max_lat, min_lon, max_lon]");
  }
  const auto v = b.get<std::array<double, 4>>();
  return {v[0], v[1], v[2], v[3]};
}

SpeedConfig RunConfig::speed() const {
  SpeedConfig c{get<double>(data_, "network", "default_kmh"), get<double>(data_, "network", "cap_kmh")};
  if (!(c.default_kmh > 0.0) || !(c.cap_kmh >= c.default_kmh)) {
    throw ConfigError("network speeds must satisfy 0 < default_kmh <= cap_kmh");
  }
  return c;
}

EstimationConfig RunConfig::estimation() const {
  EstimationConfig c;
  c.day_type = parse_day_type(get<std::string>(data_, "estimation", "day_type"));
  c.inter_pickup.max_gap_min = get<double>(data_, "estimation", "max_gap_min");
  c.inter_pickup.fallback_min = get<double>(data_, "estimation", "fallback_min");
  if (!(c.inter_pickup.max_gap_min > 0.0) || !(c.inter_pickup.fallback_min > 0.0)) {
    throw ConfigError("estimation gaps must be positive");
  }
  return c;
}

Tariff RunConfig::tariff() const {
  Tariff t;
  t.initial_charge = get<double>(data_, "tariff", "initial_charge");
  t.distance_rate = get<double>(data_, "tariff", "distance_rate");
  t.distance_unit_miles = get<double>(data_, "tariff", "distance_unit_miles");
  t.time_rate_per_min = get<double>(data_, "tariff", "time_rate_per_min");
  t.mta_surcharge = get<double>(data_, "tariff", "mta_surcharge");
  t.improvement_surcharge = get<double>(data_, "tariff", "improvement_surcharge");
  t.night_surcharge = get<double>(data_, "tariff", "night_surcharge");
  t.night_start_hour = get<int>(data_, "tariff", "night_start_hour");
  t.night_end_hour = get<int>(data_, "tariff", "night_end_hour");
  t.peak_surcharge = get<double>(data_, "tariff", "peak_surcharge");
  t.peak_start_hour = get<int>(data_, "tariff", "peak_start_hour");
  t.peak_end_hour = get<int>(data_, "tariff", "peak_end_hour");
  t.slow_speed_kmh = get<double>(data_, "tariff", "slow_speed_kmh");
  return t;
}

EnergyParams RunConfig::energy() const {
  EnergyParams e;
  e.alpha1 = get<double>(data_, "energy", "alpha1");
  e.alpha2 = get<double>(data_, "energy", "alpha2");
  e.alpha3 = get<double>(data_, "energy", "alpha3");
  e.beta = get<double>(data_, "energy", "beta");
  e.aux_load_kw = get<double>(data_, "energy", "aux_load_kw");
  return e;
}

Battery RunConfig::battery() const {
  return {get<double>(data_, "battery", "capacity_kwh"), get<double>(data_, "battery", "low_fraction"),
          get<double>(data_, "battery", "high_fraction")};
}

ChargingSpec RunConfig::charging() const {
  auto c = ChargingSpec::of(parse_charge_mode(get<std::string>(data_, "charging", "mode")));
  const auto& rate = data_["charging"]["rate_kw"];
  if (!rate.is_null()) {
    if (!rate.is_number() || !(rate.get<double>() > 0.0)) {
      throw ConfigError("charging.rate_kw must be a positive number");
    }
    c.rate_kw = rate.get<double>();
  }
  return c;
}

EnergyPrice RunConfig::price() const {
  return {get<double>(data_, "price", "electricity_usd_per_kwh"),
          get<double>(data_, "price", "gasoline_usd_per_gallon"),
          get<double>(data_, "price", "kwh_per_gallon")};
}

Powertrain RunConfig::powertrain() const {
  return parse_powertrain(get<std::string>(data_, "solver", "powertrain"));
}

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.horizon_min = get<int>(data_, "solver", "horizon_min");
  const auto shift = parse_shift(get<std::string>(data_, "solver", "shift"));
  s.start_clock_min = (shift == Shift::Morning ? kMorningStartHour : kEveningStartHour) * 60;
  s.battery_bin_fraction = get<double>(data_, "solver", "battery_bin_fraction");
  s.tau_set = get<std::vector<int>>(data_, "solver", "tau_set");
  s.aggregation_k = get<std::size_t>(data_, "solver", "aggregation_k");
  s.full_adjacency = get<bool>(data_, "solver", "full_adjacency");
  s.unpriced_trip_energy = get<bool>(data_, "solver", "unpriced_trip_energy");
  s.powertrain = powertrain();
  s.peak_eligible = get<bool>(data_, "solver", "peak_eligible");
  const auto& date = data_["solver"]["date"];
  if (!date.is_null()) {
    const auto day = date.is_string() ? parse_date(date.get<std::string>()) : std::nullopt;
    if (!day) throw ConfigError("solver.date must be YYYY-MM-DD");
    HolidayCalendar holidays;
    if (auto h = input("holidays")) {
      std::ifstream in(*h);
      if (!in) throw IoError("cannot open " + h->string());
      holidays = HolidayCalendar::read_csv(in);
    }
    s.peak_eligible = peak_eligible(*day, holidays);
  }
  return s;
}

std::string RunConfig::suffix() const {
  std::string s;
  if (powertrain() == Powertrain::ICE) s += "_ice";
  if (get<bool>(data_, "solver", "unpriced_trip_energy")) s += "_unpriced";
  return s;
}

std::string RunConfig::demand_file() const {
  return "demand_" + get<std::string>(data_, "estimation", "day_type") + ".json";
}

RunConfig load_run_config(const fs::path& file, std::span<const std::string> overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json user = json::parse(in, nullptr, false);
  if (user.is_discarded()) throw ConfigError("config file is not valid JSON: " + file.string());
  return RunConfig(std::move(user), fs::absolute(file).parent_path(), overrides);
}

}  // namespace etaxi::cli
