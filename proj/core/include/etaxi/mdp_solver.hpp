#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "etaxi/energy_model.hpp"
#include "etaxi/estimation.hpp"
#include "etaxi/fare_model.hpp"
#include "etaxi/road_network.hpp"

namespace etaxi {

/// Solver-ready MDP: every parameter the recurrence reads, tabulated over a
/// small set of solver nodes and cyclic parameter slots.
///
/// Time t counts steps of `step_minutes` from the shift start (one minute for
/// compiled city models); travel tables and the horizon are in steps.
/// Parameters for t are read from slot
/// ((start_clock_min + t * step_minutes) / slot_minutes) % n_slots. Pair tables
/// are indexed [(slot * n + i) * n + j], node tables [slot * n + i].
///
/// Battery is discretized into n_bins levels; bin b is the level
/// battery_low_kwh + b * bin_kwh. Consumption rounds up to whole bins and
/// charging rounds down, so feasibility is never overstated.
struct MdpInstance {
  struct Destination {
    NodeIndex node = 0;
    double prob = 0.0;
  };

  int horizon = 0;
  int start_clock_min = 0;
  int step_minutes = 1;
  int slot_minutes = 60;
  int n_slots = kHoursPerDay;
  int n_nodes = 0;

  bool battery_limited = true;  ///< false for ICE: one bin, no energy feasibility
  int n_bins = 1;
  double bin_kwh = 1.0;
  double battery_low_kwh = 0.0;

  std::vector<int> tau_set{0};  ///< minutes, ascending, starts with 0, multiples of step_minutes
  double charge_rate_kw = kMode3RateKw;
  double usd_per_kwh = 0.20;
  /// Also subtract the bare trip energy (kWh) from each fare term.
  bool unpriced_trip_energy = false;

  std::vector<JunctionId> node_ids;
  std::vector<std::vector<NodeIndex>> targets;  ///< per node, ascending

  std::vector<int> travel_min;  ///< steps, -1 when unreachable
  std::vector<double> energy_kwh;
  std::vector<double> distance_km;
  std::vector<double> gross_fare;

  std::vector<int> station_of;  ///< per node: station index, -1 when unreachable
  std::vector<int> to_station_min;
  std::vector<double> to_station_kwh;
  std::vector<double> to_station_km;
  std::vector<int> from_station_min;  ///< r(i) -> j, pair table
  std::vector<double> from_station_kwh;
  std::vector<double> from_station_km;

  std::vector<double> pickup_prob;  ///< node table
  std::vector<double> pickup_count;
  std::vector<double> competitor_count;
  std::vector<std::vector<Destination>> dest;  ///< node table of sparse rows

  /// Allocates every table for the current dimensions (zeros, empty rows).
  void allocate();
  /// Checks table sizes and ranges; throws DataError.
  void validate() const;

  int slot_at(int t) const {
    return ((start_clock_min + t * step_minutes) / slot_minutes) % n_slots;
  }
  std::size_t pair(int s, NodeIndex i, NodeIndex j) const {
    return (static_cast<std::size_t>(s) * n_nodes + i) * n_nodes + j;
  }
  std::size_t node(int s, NodeIndex i) const { return static_cast<std::size_t>(s) * n_nodes + i; }
  int n_tau() const { return static_cast<int>(tau_set.size()); }
  double level_kwh(int bin) const { return battery_low_kwh + bin * bin_kwh; }
  int bin_of_level(double kwh) const;

  /// Whole bins consumed by `kwh` (rounded up); kNeverBins for +inf.
  int consume_bins(double kwh) const;
  /// Whole bins gained by charging `tau` minutes (rounded down).
  int charge_bins(int tau) const;

  /// Fare minus energy cost for delivering j -> k at slot s.
  double trip_net_revenue(int s, NodeIndex j, NodeIndex k) const;

  static constexpr int kNeverBins = std::numeric_limits<int>::max() / 4;
};

struct ActionRef {
  NodeIndex target = 0;
  int tau_min = 0;
  friend bool operator==(const ActionRef&, const ActionRef&) = default;
};

/// Outcome of applying an action in a state.
struct Transition {
  bool feasible = false;
  int arrive_t = 0;
  int arrive_bin = 0;
  double cost_usd = 0.0;        ///< U^a
  double driven_kwh = 0.0;      ///< energy of the driven legs
  double first_leg_kwh = 0.0;   ///< to the station (tau > 0)
  double purchased_kwh = 0.0;   ///< tau * C
  double km = 0.0;
  int station = -1;             ///< charging station used (tau > 0)
  int station_arrive_t = 0;
  int bin_before_charge = 0;
  int bin_after_charge = 0;
};

/// Outcome of a pick-up at j (slot of time t) heading to k.
struct Delivery {
  bool feasible = false;  ///< energy to k plus reserve at k fits in the battery
  int arrive_t = 0;
  int arrive_bin = 0;
  double net_revenue = 0.0;  ///< fare minus energy cost (and bare trip kWh when unpriced_trip_energy is set)
  double gross_fare = 0.0;
  double energy_kwh = 0.0;
  double km = 0.0;
};

/// Precomputed whole-bin tables; shared by the solver and the simulator.
class MdpModel {
 public:
  explicit MdpModel(std::shared_ptr<const MdpInstance> instance);

  const MdpInstance& instance() const { return *inst_; }
  std::shared_ptr<const MdpInstance> shared_instance() const { return inst_; }

  /// Reserve bins needed at node j at time t (energy to r(j)).
  int reserve_bins(int t, NodeIndex j) const;
  Transition transition(int t, NodeIndex i, int bin, NodeIndex j, int tau_index) const;
  Delivery delivery(int t, NodeIndex j, int bin, NodeIndex k) const;
  int tau_index(int tau_min) const;

 private:
  std::shared_ptr<const MdpInstance> inst_;
  std::vector<int> direct_bins_;        // pair table
  std::vector<int> reserve_bins_;       // node table
  std::vector<int> from_station_bins_;  // pair table
  std::vector<int> charge_bins_;        // per tau index
};

/// Steps from taking `a` at (t, i) until arrival at the target: T(i, j), or
/// T(i, r(i)) + tau + T(r(i), j) evaluated when the second leg departs. A stall
/// (j == i, tau == 0) holds for one step. Throws InfeasibleError without a path.
int action_duration(const MdpModel& model, int t, NodeIndex i, ActionRef a);

/// P^s: destination mass from j at time t whose trip and the reserve at the
/// destination fit in battery bin `bin`.
double reachable_mass(const MdpModel& model, int t, NodeIndex j, int bin);

struct SolveOptions {
  int threads = 0;  ///< 0 = OpenMP default
};

struct RankedAction {
  ActionRef action;
  double value = 0.0;
};

/// Optimal values R*[t, i, b] for t in [0, H) plus the arrival table
///   G[t, j, b] = (1 - P^p P^s) R*[t, j, b]
///              + sum_{feasible k} P^p P^d(j, k) (F(j, k) + R*[t + T(j, k), k, b - E(j, k)])
/// so that R*[t, i, b, A] = G[t', j, b'] - U^a (0 beyond the horizon).
class Solution {
 public:
  static constexpr double kDead = -std::numeric_limits<double>::infinity();

  Solution(std::shared_ptr<const MdpInstance> instance, std::vector<double> values,
           std::vector<double> arrival, std::vector<std::int32_t> best,
           std::vector<std::int32_t> second);

  const MdpInstance& instance() const { return model_.instance(); }
  const MdpModel& model() const { return model_; }
  int horizon() const { return instance().horizon; }

  /// R*[t, i, b]; 0 for t >= H.
  double value(int t, NodeIndex i, int bin) const;
  double arrival_value(int t, NodeIndex j, int bin) const;
  bool dead(int t, NodeIndex i, int bin) const { return value(t, i, bin) == kDead; }

  /// R*[t, i, b, A]; kDead when infeasible.
  double action_value(int t, NodeIndex i, int bin, NodeIndex target, int tau_index) const;
  double action_value(int t, NodeIndex i, int bin, ActionRef a) const;

  std::optional<ActionRef> best_action(int t, NodeIndex i, int bin) const;
  std::optional<ActionRef> second_action(int t, NodeIndex i, int bin) const;

  /// Top-k feasible actions ordered by value, then lower target, then smaller tau.
  std::vector<RankedAction> best_actions(int t, NodeIndex i, int bin,
                                         std::size_t k = static_cast<std::size_t>(-1)) const;

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::int32_t>& best_codes() const { return best_; }
  const std::vector<std::int32_t>& second_codes() const { return second_; }
  std::size_t state(int t, NodeIndex i, int bin) const {
    return (static_cast<std::size_t>(t) * instance().n_nodes + i) * instance().n_bins + bin;
  }
  std::optional<ActionRef> decode(NodeIndex i, std::int32_t code) const;

 private:
  MdpModel model_;
  std::vector<double> values_;
  std::vector<double> arrival_;
  std::vector<std::int32_t> best_;
  std::vector<std::int32_t> second_;
};

/// Backward induction from the last minute of the horizon to 0.
Solution solve_backward(std::shared_ptr<const MdpInstance> instance, const SolveOptions& opts = {});

/// Rebuilds a solution from stored values (e.g. a policy artifact): the
/// arrival table and the argmax codes are recomputed from the instance.
Solution solution_from_values(std::shared_ptr<const MdpInstance> instance,
                              std::vector<double> values, const SolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Compiling estimated models into an instance

struct SolverConfig {
  int horizon_min = 12 * 60;
  int start_clock_min = kMorningStartHour * 60;
  bool peak_eligible = true;  ///< weekday, not a holiday
  double battery_bin_fraction = 0.01;
  std::vector<int> tau_set{0, 10, 20, 30, 60};
  std::size_t aggregation_k = 200;
  bool full_adjacency = false;
  bool unpriced_trip_energy = false;
  Powertrain powertrain = Powertrain::Electric;

  void validate() const;
};

struct ModelInputs {
  const SpeedNetwork* network = nullptr;
  const StationTable* stations = nullptr;  ///< required for electric taxis
  const DemandModel* demand = nullptr;
  EnergyParams energy;
  Battery battery;
  ChargingSpec charging;
  Tariff tariff;
  EnergyPrice price;
};

/// Top-K junctions by total pick-ups (ties to the smaller id), ascending.
std::vector<NodeIndex> select_solver_nodes(const DemandModel& demand, std::size_t k);

MdpInstance compile_instance(const ModelInputs& inputs, const SolverConfig& config);

}  // namespace etaxi
