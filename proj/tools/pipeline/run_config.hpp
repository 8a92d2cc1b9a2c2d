#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "etaxi/estimation.hpp"
#include "etaxi/fare_model.hpp"
#include "etaxi/mdp_solver.hpp"
#include "etaxi/trip_ingest.hpp"

namespace etaxi::cli {

/// Every key the run configuration accepts, with its default.
nlohmann::json default_config();

/// Sets `a.b.c=value`; the value is parsed as JSON when possible, otherwise
/// taken as a string.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Merged configuration. Relative paths resolve against `base_dir`.
class RunConfig {
 public:
  RunConfig(nlohmann::json user, std::filesystem::path base_dir,
            std::span<const std::string> overrides = {});

  const nlohmann::json& data() const { return data_; }
  int threads() const { return data_["runtime"]["threads"].get<int>(); }
  std::string log_level() const { return data_["logging"]["level"].get<std::string>(); }

  /// `paths.<key>`; nullopt when unset.
  std::optional<std::filesystem::path> input(const char* key) const;
  /// Like input(), but throws ConfigError when unset and IoError when missing.
  std::filesystem::path require_input(const char* key) const;
  std::filesystem::path output_dir() const;
  std::filesystem::path output(const std::string& name) const { return output_dir() / name; }

  /// Hash of the sections that determine a stage's artifacts.
  std::string stage_hash(std::string_view stage) const;

  IngestConfig ingest() const;
  BoundingBox bbox() const;
  SpeedConfig speed() const;
  EstimationConfig estimation() const;
  Tariff tariff() const;
  EnergyParams energy() const;
  Battery battery() const;
  ChargingSpec charging() const;
  EnergyPrice price() const;
  Powertrain powertrain() const;
  /// Solver settings; peak eligibility comes from `solver.date` and the
  /// holiday file when a date is given.
  SolverConfig solver() const;

  /// Artifact name suffix for non-default solver variants.
  std::string suffix() const;
  std::string demand_file() const;

 private:
  nlohmann::json data_;
  std::filesystem::path base_;
};

RunConfig load_run_config(const std::filesystem::path& file,
                          std::span<const std::string> overrides = {});

}  // namespace etaxi::cli
