#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "etaxi/fare_model.hpp"
#include "etaxi/mdp_solver.hpp"
#include "etaxi/trip_ingest.hpp"

namespace etaxi {

struct StartState {
  NodeIndex node = 0;
  int t = 0;
  int bin = 0;
};

struct ChargeEvent {
  int t = 0;  ///< arrival at the station
  int station = -1;
  int tau_min = 0;
  double kwh = 0.0;  ///< purchased, tau * C
};

/// Outcome of one simulated taxi-shift.
struct ShiftResult {
  StartState start;
  double net_revenue = 0.0;
  double gross_fare = 0.0;
  double energy_cost = 0.0;
  double delivery_km = 0.0;
  double total_km = 0.0;
  double energy_kwh = 0.0;                ///< traction + auxiliary energy drawn
  double energy_from_battery_kwh = 0.0;   ///< part covered by the starting charge
  double energy_from_charging_kwh = 0.0;  ///< part covered by charging
  double charged_kwh = 0.0;
  std::vector<ChargeEvent> charge_events;
  int trips_served = 0;
  double hours_worked = 0.0;
  int decisions = 0;
  int battery_violations = 0;
  int dead_state_entries = 0;
};

/// Independent random stream for (seed, stream index).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);
/// Uniform in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

/// One shift following the stored best actions. Each arrival before the
/// horizon consumes two uniforms: pick-up success, then destination.
ShiftResult rollout_single(const Solution& solution, StartState start, std::uint64_t seed);

struct MonteCarloSummary {
  std::vector<double> net_revenue;  ///< one per rollout, in rollout order
  double mean = 0.0;
  double std_error = 0.0;
  double mean_gross_fare = 0.0;
  double mean_energy_cost = 0.0;
  int battery_violations = 0;
  int dead_state_entries = 0;
};

/// Rollout k uses seed + k; results do not depend on the thread count.
std::vector<ShiftResult> rollout_batch(const Solution& solution, StartState start, std::size_t n,
                                       std::uint64_t seed, int threads = 0);
MonteCarloSummary summarize(std::span<const ShiftResult> results);
MonteCarloSummary run_rollouts(const Solution& solution, StartState start, std::size_t n,
                               std::uint64_t seed, int threads = 0);

/// Per solver node: maximum concurrent policy taxis; 0 means unlimited.
using CapacityMap = std::vector<int>;

struct FleetConfig {
  std::size_t n_taxis = 1;
  std::uint64_t seed = 1;
  StartState start;                    ///< taxi 0
  std::vector<StartState> start_pool;  ///< other taxis sample from here (else `start`)
  CapacityMap capacity;                ///< empty: unlimited everywhere

  void validate(const MdpInstance& m) const;
};

struct FleetResult {
  std::vector<ShiftResult> taxis;
  std::vector<int> peak_occupancy;  ///< per node
  int capacity_violations = 0;
  int blocked_stalls = 0;
};

/// Taxis move in id order within each step. A taxi takes its best-ranked
/// action whose target has spare capacity; when all are blocked it stalls one
/// step. A target is held from the decision until the pick-up draw on arrival.
/// The pick-up probability at a junction hosting m policy taxis becomes
/// pick-ups / (pick-ups + nearby drop-offs + m - 1).
FleetResult rollout_fleet(const Solution& solution, const FleetConfig& config);

/// Drop-off-to-next-pick-up presence of each taxi at its drop-off junction
/// (gaps up to `max_gap_min`); per junction, the mean number present over
/// the minutes with anyone present, rounded up, at least 1.
std::vector<int> junction_capacity_from_data(std::span<const SnappedTrip> trips,
                                             std::size_t n_junctions, double max_gap_min = 120.0);

/// Restricts per-junction capacities to the solver nodes.
CapacityMap node_capacities(const MdpInstance& m, const RoadGraph& graph,
                            std::span<const int> junction_capacity);

inline constexpr double kGridCo2KgPerKwh = 0.7007;
inline constexpr double kGasolineCo2KgPerLiter = 2.348;
inline constexpr double kLitersPerGallon = 3.785;

struct EmissionReport {
  double electricity_kwh = 0.0;
  double gasoline_liters = 0.0;
  double co2_kg = 0.0;
};

EmissionReport emission_report(double energy_kwh, Powertrain powertrain,
                               double kwh_per_gallon = 33.7);
EmissionReport emission_report(std::span<const ShiftResult> results, Powertrain powertrain,
                               double kwh_per_gallon = 33.7);

/// Energy cost of a realized itinerary at another unit price.
double replay_energy_cost(const ShiftResult& r, double usd_per_kwh);

struct PriceRow {
  double usd_per_gallon = 0.0;
  double dp_value = 0.0;
  double mean_net_revenue = 0.0;
  double std_error = 0.0;
  double mean_gross_fare = 0.0;
  double mean_fuel_cost = 0.0;
};

/// One solve and `n_rollouts` rollouts per gas price on an ICE instance.
/// Rollouts reuse the same seeds at every price.
std::vector<PriceRow> gas_price_sensitivity(const MdpInstance& ice, std::span<const double> prices,
                                            StartState start, std::size_t n_rollouts,
                                            std::uint64_t seed, double kwh_per_gallon = 33.7,
                                            int threads = 0);

void write_results_csv(std::ostream& out, std::span<const ShiftResult> results,
                       const MdpInstance& m);
nlohmann::ordered_json results_summary(std::span<const ShiftResult> results, const MdpInstance& m,
                                       Powertrain powertrain);

}  // namespace etaxi
