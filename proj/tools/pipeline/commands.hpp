#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "etaxi/fleet_sim.hpp"
#include "etaxi/synthetic_city.hpp"
#include "run_config.hpp"

namespace etaxi::cli {

/// Input models shared by solve, simulate and report.
struct LoadedModels {
  SpeedNetwork network;
  DemandModel demand;
  std::optional<StationTable> stations;
  std::string network_hash;
  std::string demand_hash;
  std::string stations_hash;
};

LoadedModels load_models(const RunConfig& config);
MdpInstance compile(const RunConfig& config, const LoadedModels& models);

/// Configured start junction (or the busiest solver node) at t = 0 with the
/// battery at `simulation.start_soc_fraction` of capacity.
StartState start_state(const RunConfig& config, const MdpInstance& m, const LoadedModels& models);

struct SolveSummary {
  std::filesystem::path policy_file;
  StartState start;
  double start_value = 0.0;
  std::string instance_hash;
};

struct SimulateSummary {
  std::filesystem::path results_file;
  std::filesystem::path summary_file;
  double dp_value = 0.0;
  double mean_net_revenue = 0.0;
  double std_error = 0.0;
};

void cmd_ingest(const RunConfig& config);
void cmd_build_network(const RunConfig& config);
void cmd_estimate(const RunConfig& config);
SolveSummary cmd_solve(const RunConfig& config);
SimulateSummary cmd_simulate(const RunConfig& config);
void cmd_report(const RunConfig& config);

/// Writes graph.json, stations.csv, trips.csv, holidays.csv and a config.json
/// that runs the whole pipeline on them.
void cmd_synth_demand(const std::filesystem::path& dir, const SyntheticCityConfig& city);

}  // namespace etaxi::cli
