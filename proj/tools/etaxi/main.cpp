#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <functional>
#include <iostream>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace etaxi;

namespace {

int exit_code(const Error& e) { return static_cast<int>(e.kind()); }

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("etaxi"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  CLI::App app{"Electric-taxi service strategy: estimation, DP solver and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file = "config.json";
  std::vector<std::string> overrides;
  int threads = -1;
  std::string log_level;
  app.add_option("-c,--config", config_file, "run configuration (JSON)");
  app.add_option("--set", overrides, "override a config key, e.g. --set solver.horizon_min=240")
      ->allow_extra_args(false);
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  using Stage = std::function<void(const cli::RunConfig&)>;
  std::vector<std::pair<CLI::App*, Stage>> stages;
  auto stage = [&](const char* name, const char* help, Stage fn) {
    stages.emplace_back(app.add_subcommand(name, help), std::move(fn));
  };
  stage("ingest", "parse, snap and filter trip records", cli::cmd_ingest);
  stage("build-network", "label segment speeds and idling ratios", cli::cmd_build_network);
  stage("estimate", "estimate pick-up and destination probabilities", cli::cmd_estimate);
  stage("solve", "solve the service-strategy MDP", [](const cli::RunConfig& c) {
    const auto s = cli::cmd_solve(c);
    std::cout << "R*[0, " << s.start.node << ", " << s.start.bin << "] = " << s.start_value
              << " USD  (" << s.policy_file.filename().string() << ")\n";
  });
  stage("simulate", "roll out the solved policy", [](const cli::RunConfig& c) {
    const auto s = cli::cmd_simulate(c);
    std::cout << "mean net revenue " << s.mean_net_revenue << " USD (se " << s.std_error
              << "), DP value " << s.dp_value << " USD  (" << s.results_file.filename().string()
              << ")\n";
  });
  stage("report", "aggregate report with emissions", cli::cmd_report);
  stage("run", "every stage from ingest to report", [](const cli::RunConfig& c) {
    cli::cmd_ingest(c);
    cli::cmd_build_network(c);
    cli::cmd_estimate(c);
    cli::cmd_solve(c);
    cli::cmd_simulate(c);
    cli::cmd_report(c);
  });

  auto* synth = app.add_subcommand("synth-demand", "write a synthetic grid city fixture");
  std::string synth_dir = "city";
  SyntheticCityConfig city;
  synth->add_option("-o,--out", synth_dir, "output directory");
  synth->add_option("--seed", city.seed, "generator seed");
  synth->add_option("--taxis", city.n_taxis, "taxis per day");
  synth->add_option("--days", city.n_days, "weekdays to generate");
  synth->add_option("--rows", city.rows, "grid rows");
  synth->add_option("--cols", city.cols, "grid columns");
  synth->add_option("--discrepancy-rows", city.discrepancy_rows,
                    "rows whose recorded distance is 1 km off the route");
  synth->add_option("--malformed-rows", city.malformed_rows, "unparseable rows to append");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::Config);
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (!log_level.empty()) spdlog::set_level(spdlog::level::from_str(log_level));
    if (synth->parsed()) {
      cli::cmd_synth_demand(synth_dir, city);
    } else {
      if (threads >= 0) overrides.push_back("runtime.threads=" + std::to_string(threads));
      const auto config = cli::load_run_config(config_file, overrides);
      if (log_level.empty()) spdlog::set_level(spdlog::level::from_str(config.log_level()));
      for (auto& [cmd, fn] : stages) {
        if (cmd->parsed()) fn(config);
      }
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  const std::chrono::duration<double> took = std::chrono::steady_clock::now() - started;
  spdlog::info("done in {:.2f} s", took.count());
  return 0;
}
