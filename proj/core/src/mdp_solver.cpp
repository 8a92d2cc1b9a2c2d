#include "etaxi/mdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace etaxi {

namespace {

constexpr double kRoundEps = 1e-9;
constexpr double kStayEps = 1e-12;

template <class T>
void check_size(const std::vector<T>& v, std::size_t n, const char* name) {
  if (v.size() != n) throw DataError(std::string("MDP table '") + name + "' has the wrong size");
}

}  // namespace

// ---------------------------------------------------------------------------
// MdpInstance

void MdpInstance::allocate() {
  const std::size_t n = n_nodes;
  const std::size_t pairs = static_cast<std::size_t>(n_slots) * n * n;
  const std::size_t nodes = static_cast<std::size_t>(n_slots) * n;
  node_ids.resize(n);
  targets.assign(n, {});
  travel_min.assign(pairs, 0);
  energy_kwh.assign(pairs, 0.0);
  distance_km.assign(pairs, 0.0);
  gross_fare.assign(pairs, 0.0);
  station_of.assign(n, -1);
  to_station_min.assign(nodes, 0);
  to_station_kwh.assign(nodes, 0.0);
  to_station_km.assign(nodes, 0.0);
  from_station_min.assign(pairs, 0);
  from_station_kwh.assign(pairs, 0.0);
  from_station_km.assign(pairs, 0.0);
  pickup_prob.assign(nodes, 0.0);
  pickup_count.assign(nodes, 0.0);
  competitor_count.assign(nodes, 0.0);
  dest.assign(nodes, {});
}

void MdpInstance::validate() const {
  if (horizon < 0) throw DataError("horizon must be non-negative");
  if (n_nodes <= 0) throw DataError("MDP needs at least one node");
  if (step_minutes <= 0 || slot_minutes <= 0 || n_slots <= 0) {
    throw DataError("bad step or parameter slot length");
  }
  if (n_bins < 1 || (battery_limited && n_bins < 2)) throw DataError("bad battery bin count");
  if (!(bin_kwh > 0.0)) throw DataError("battery bin width must be positive");
  if (tau_set.empty() || tau_set.front() != 0) throw DataError("charging durations must start at 0");
  for (std::size_t k = 1; k < tau_set.size(); ++k) {
    if (tau_set[k] <= tau_set[k - 1]) throw DataError("charging durations must be ascending");
    if (tau_set[k] % step_minutes != 0) throw DataError("charging durations must be whole steps");
  }
  const std::size_t n = n_nodes;
  const std::size_t pairs = static_cast<std::size_t>(n_slots) * n * n;
  const std::size_t nodes = static_cast<std::size_t>(n_slots) * n;
  check_size(node_ids, n, "node_ids");
  check_size(targets, n, "targets");
  check_size(travel_min, pairs, "travel_min");
  check_size(energy_kwh, pairs, "energy_kwh");
  check_size(distance_km, pairs, "distance_km");
  check_size(gross_fare, pairs, "gross_fare");
  check_size(station_of, n, "station_of");
  check_size(to_station_min, nodes, "to_station_min");
  check_size(to_station_kwh, nodes, "to_station_kwh");
  check_size(to_station_km, nodes, "to_station_km");
  check_size(from_station_min, pairs, "from_station_min");
  check_size(from_station_kwh, pairs, "from_station_kwh");
  check_size(from_station_km, pairs, "from_station_km");
  check_size(pickup_prob, nodes, "pickup_prob");
  check_size(pickup_count, nodes, "pickup_count");
  check_size(competitor_count, nodes, "competitor_count");
  check_size(dest, nodes, "dest");
  for (NodeIndex i = 0; i < n; ++i) {
    const auto& tg = targets[i];
    if (tg.empty()) throw DataError("node without targets");
    for (std::size_t k = 0; k < tg.size(); ++k) {
      if (tg[k] >= n || (k > 0 && tg[k] <= tg[k - 1])) {
        throw DataError("targets must be ascending node indices");
      }
    }
  }
  for (double p : pickup_prob) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("pick-up probability outside [0, 1]");
  }
  for (const auto& row : dest) {
    double sum = 0.0;
    for (const auto& d : row) {
      if (d.node >= n || !(d.prob >= 0.0)) throw DataError("bad destination entry");
      sum += d.prob;
    }
    if (sum > 1.0 + 1e-9) throw DataError("destination row sums above 1");
  }
}

int MdpInstance::bin_of_level(double kwh) const {
  if (!battery_limited) return 0;
  const int b = static_cast<int>(std::floor((kwh - battery_low_kwh) / bin_kwh + kRoundEps));
  return std::clamp(b, 0, n_bins - 1);
}

int MdpInstance::consume_bins(double kwh) const {
  if (!battery_limited) return 0;
  if (!std::isfinite(kwh)) return kNeverBins;
  if (kwh <= 0.0) return 0;
  const double b = std::ceil(kwh / bin_kwh - kRoundEps);
  return b >= kNeverBins ? kNeverBins : static_cast<int>(b);
}

int MdpInstance::charge_bins(int tau) const {
  if (!battery_limited || tau <= 0) return 0;
  return static_cast<int>(std::floor(charge_energy_kwh(tau, charge_rate_kw) / bin_kwh + kRoundEps));
}

double MdpInstance::trip_net_revenue(int s, NodeIndex j, NodeIndex k) const {
  const auto p = pair(s, j, k);
  double f = net_revenue(gross_fare[p], energy_kwh[p], usd_per_kwh);
  if (unpriced_trip_energy) f -= energy_kwh[p];
  return f;
}

// ---------------------------------------------------------------------------
// MdpModel

MdpModel::MdpModel(std::shared_ptr<const MdpInstance> instance) : inst_(std::move(instance)) {
  const auto& m = *inst_;
  m.validate();
  direct_bins_.resize(m.energy_kwh.size());
  from_station_bins_.resize(m.from_station_kwh.size());
  for (std::size_t k = 0; k < direct_bins_.size(); ++k) {
    direct_bins_[k] = m.travel_min[k] < 0 ? MdpInstance::kNeverBins : m.consume_bins(m.energy_kwh[k]);
    from_station_bins_[k] = m.from_station_min[k] < 0 ? MdpInstance::kNeverBins
                                                      : m.consume_bins(m.from_station_kwh[k]);
  }
  reserve_bins_.resize(m.to_station_kwh.size());
  for (std::size_t k = 0; k < reserve_bins_.size(); ++k) {
    const auto node = static_cast<NodeIndex>(k % m.n_nodes);
    const bool reachable = m.station_of[node] >= 0 && m.to_station_min[k] >= 0;
    reserve_bins_[k] = !m.battery_limited ? 0
                       : reachable        ? m.consume_bins(m.to_station_kwh[k])
                                          : MdpInstance::kNeverBins;
  }
  charge_bins_.resize(m.tau_set.size());
  for (std::size_t k = 0; k < m.tau_set.size(); ++k) charge_bins_[k] = m.charge_bins(m.tau_set[k]);
}

int MdpModel::reserve_bins(int t, NodeIndex j) const {
  return reserve_bins_[inst_->node(inst_->slot_at(t), j)];
}

int MdpModel::tau_index(int tau_min) const {
  const auto& ts = inst_->tau_set;
  const auto it = std::find(ts.begin(), ts.end(), tau_min);
  return it == ts.end() ? -1 : static_cast<int>(it - ts.begin());
}

Transition MdpModel::transition(int t, NodeIndex i, int bin, NodeIndex j, int tau_index) const {
  const auto& m = *inst_;
  Transition tr;
  const int s = m.slot_at(t);
  const int tau = m.tau_set[tau_index];
  int b = bin;
  if (tau == 0) {
    if (i == j) {
      tr.arrive_t = t + 1;
    } else {
      const auto p = m.pair(s, i, j);
      if (m.travel_min[p] < 0) return tr;
      b -= direct_bins_[p];
      tr.arrive_t = t + std::max(1, m.travel_min[p]);
      tr.driven_kwh = m.energy_kwh[p];
      tr.km = m.distance_km[p];
    }
  } else {
    const int st = m.station_of[i];
    const auto n1 = m.node(s, i);
    if (st < 0 || m.to_station_min[n1] < 0) return tr;
    b -= reserve_bins_[n1];
    if (b < 0) return tr;
    tr.station = st;
    tr.station_arrive_t = t + m.to_station_min[n1];
    tr.bin_before_charge = b;
    b = std::min(m.n_bins - 1, b + charge_bins_[tau_index]);
    tr.bin_after_charge = b;
    const int depart = tr.station_arrive_t + tau / m.step_minutes;
    const auto p2 = m.pair(m.slot_at(depart), i, j);
    if (m.from_station_min[p2] < 0) return tr;
    b -= from_station_bins_[p2];
    tr.arrive_t = depart + m.from_station_min[p2];
    tr.first_leg_kwh = m.to_station_kwh[n1];
    tr.driven_kwh = m.to_station_kwh[n1] + m.from_station_kwh[p2];
    tr.purchased_kwh = charge_energy_kwh(tau, m.charge_rate_kw);
    tr.km = m.to_station_km[n1] + m.from_station_km[p2];
  }
  if (b < 0 || b < reserve_bins(tr.arrive_t, j)) return tr;
  tr.feasible = true;
  tr.arrive_bin = b;
  tr.cost_usd = (tr.driven_kwh + tr.purchased_kwh) * m.usd_per_kwh;
  return tr;
}

Delivery MdpModel::delivery(int t, NodeIndex j, int bin, NodeIndex k) const {
  const auto& m = *inst_;
  Delivery d;
  const int s = m.slot_at(t);
  const auto p = m.pair(s, j, k);
  if (m.travel_min[p] < 0) return d;
  const int b = bin - direct_bins_[p];
  d.arrive_t = t + std::max(1, m.travel_min[p]);
  if (b < 0 || b < reserve_bins(d.arrive_t, k)) return d;
  d.feasible = true;
  d.arrive_bin = b;
  d.gross_fare = m.gross_fare[p];
  d.energy_kwh = m.energy_kwh[p];
  d.km = m.distance_km[p];
  d.net_revenue = m.trip_net_revenue(s, j, k);
  return d;
}

int action_duration(const MdpModel& model, int t, NodeIndex i, ActionRef a) {
  const auto& m = model.instance();
  const int k = model.tau_index(a.tau_min);
  if (k < 0) throw ConfigError("charging duration not in the configured set");
  if (a.tau_min == 0) {
    if (a.target == i) return 1;
    const int steps = m.travel_min[m.pair(m.slot_at(t), i, a.target)];
    if (steps < 0) throw InfeasibleError("no path to the target junction");
    return std::max(1, steps);
  }
  const auto n1 = m.node(m.slot_at(t), i);
  if (m.station_of[i] < 0 || m.to_station_min[n1] < 0) {
    throw InfeasibleError("no charging station reachable");
  }
  const int depart = t + m.to_station_min[n1] + a.tau_min / m.step_minutes;
  const int leg2 = m.from_station_min[m.pair(m.slot_at(depart), i, a.target)];
  if (leg2 < 0) throw InfeasibleError("no path from the charging station to the target");
  return depart + leg2 - t;
}

double reachable_mass(const MdpModel& model, int t, NodeIndex j, int bin) {
  const auto& m = model.instance();
  double mass = 0.0;
  for (const auto& d : m.dest[m.node(m.slot_at(t), j)]) {
    if (model.delivery(t, j, bin, d.node).feasible) mass += d.prob;
  }
  return mass;
}

// ---------------------------------------------------------------------------
// Solution

Solution::Solution(std::shared_ptr<const MdpInstance> instance, std::vector<double> values,
                   std::vector<double> arrival, std::vector<std::int32_t> best,
                   std::vector<std::int32_t> second)
    : model_(std::move(instance)),
      values_(std::move(values)),
      arrival_(std::move(arrival)),
      best_(std::move(best)),
      second_(std::move(second)) {
  const auto& m = model_.instance();
  const std::size_t n = static_cast<std::size_t>(m.horizon) * m.n_nodes * m.n_bins;
  if (values_.size() != n || arrival_.size() != n || best_.size() != n || second_.size() != n) {
    throw DataError("solution tables do not match the instance dimensions");
  }
}

double Solution::value(int t, NodeIndex i, int bin) const {
  return t >= horizon() ? 0.0 : values_[state(t, i, bin)];
}

double Solution::arrival_value(int t, NodeIndex j, int bin) const {
  return t >= horizon() ? 0.0 : arrival_[state(t, j, bin)];
}

double Solution::action_value(int t, NodeIndex i, int bin, NodeIndex target, int tau_index) const {
  const auto tr = model_.transition(t, i, bin, target, tau_index);
  if (!tr.feasible) return kDead;
  const double g = arrival_value(tr.arrive_t, target, tr.arrive_bin);
  return g == kDead ? kDead : g - tr.cost_usd;
}

double Solution::action_value(int t, NodeIndex i, int bin, ActionRef a) const {
  const int k = model_.tau_index(a.tau_min);
  if (k < 0) return kDead;
  const auto& tg = instance().targets[i];
  if (!std::binary_search(tg.begin(), tg.end(), a.target)) return kDead;
  return action_value(t, i, bin, a.target, k);
}

std::optional<ActionRef> Solution::decode(NodeIndex i, std::int32_t code) const {
  if (code < 0) return std::nullopt;
  const auto& m = instance();
  return ActionRef{m.targets[i][code / m.n_tau()], m.tau_set[code % m.n_tau()]};
}

std::optional<ActionRef> Solution::best_action(int t, NodeIndex i, int bin) const {
  if (t >= horizon()) return std::nullopt;
  return decode(i, best_[state(t, i, bin)]);
}

std::optional<ActionRef> Solution::second_action(int t, NodeIndex i, int bin) const {
  if (t >= horizon()) return std::nullopt;
  return decode(i, second_[state(t, i, bin)]);
}

std::vector<RankedAction> Solution::best_actions(int t, NodeIndex i, int bin, std::size_t k) const {
  std::vector<RankedAction> out;
  if (t >= horizon() || k == 0) return out;
  const auto& m = instance();
  for (NodeIndex j : m.targets[i]) {
    for (int a = 0; a < m.n_tau(); ++a) {
      const double q = action_value(t, i, bin, j, a);
      if (q != kDead) out.push_back({{j, m.tau_set[a]}, q});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedAction& x, const RankedAction& y) { return x.value > y.value; });
  if (out.size() > k) out.resize(k);
  return out;
}

// ---------------------------------------------------------------------------
// Backward induction

namespace {

struct Tables {
  std::vector<double> values, arrival;
  std::vector<std::int32_t> best, second;
};

double arrival_at(const MdpModel& model, const Tables& tb, int t, NodeIndex j, int bin) {
  const auto& m = model.instance();
  const std::size_t st = (static_cast<std::size_t>(t) * m.n_nodes + j) * m.n_bins + bin;
  const double stay_value = tb.values[st];
  const double p = m.pickup_prob[m.node(m.slot_at(t), j)];
  if (p <= 0.0) return stay_value;
  double acc = 0.0, mass = 0.0;
  for (const auto& d : m.dest[m.node(m.slot_at(t), j)]) {
    if (d.prob <= 0.0) continue;
    const auto del = model.delivery(t, j, bin, d.node);
    if (!del.feasible) continue;
    const double next =
        del.arrive_t >= m.horizon
            ? 0.0
            : tb.values[(static_cast<std::size_t>(del.arrive_t) * m.n_nodes + d.node) * m.n_bins +
                        del.arrive_bin];
    if (next == Solution::kDead) return Solution::kDead;
    acc += d.prob * (del.net_revenue + next);
    mass += d.prob;
  }
  double stay = 1.0 - p * mass;
  if (stay < kStayEps) stay = 0.0;
  double g = p * acc;
  if (stay > 0.0) {
    if (stay_value == Solution::kDead) return Solution::kDead;
    g += stay * stay_value;
  }
  return g;
}

/// Evaluates every action of state (t, i, b); returns the max and writes the
/// two best codes. Earlier actions win ties.
double decide(const MdpModel& model, const Tables& tb, int t, NodeIndex i, int bin,
              std::int32_t& best, std::int32_t& second) {
  const auto& m = model.instance();
  double bq = Solution::kDead, sq = Solution::kDead;
  best = second = -1;
  const auto& tg = m.targets[i];
  const int nt = m.n_tau();
  for (std::size_t pos = 0; pos < tg.size(); ++pos) {
    for (int a = 0; a < nt; ++a) {
      const auto tr = model.transition(t, i, bin, tg[pos], a);
      if (!tr.feasible) continue;
      double g = 0.0;
      if (tr.arrive_t < m.horizon) {
        g = tb.arrival[(static_cast<std::size_t>(tr.arrive_t) * m.n_nodes + tg[pos]) * m.n_bins +
                       tr.arrive_bin];
        if (g == Solution::kDead) continue;
      }
      const double q = g - tr.cost_usd;
      const auto code = static_cast<std::int32_t>(pos * nt + a);
      if (q > bq) {
        second = best;
        sq = bq;
        best = code;
        bq = q;
      } else if (q > sq) {
        second = code;
        sq = q;
      }
    }
  }
  return bq;
}

int thread_count(const SolveOptions& opts) {
#ifdef _OPENMP
  return opts.threads > 0 ? opts.threads : omp_get_max_threads();
#else
  (void)opts;
  return 1;
#endif
}

Tables allocate_tables(const MdpInstance& m) {
  const std::size_t n = static_cast<std::size_t>(m.horizon) * m.n_nodes * m.n_bins;
  Tables tb;
  tb.values.assign(n, 0.0);
  tb.arrival.assign(n, 0.0);
  tb.best.assign(n, -1);
  tb.second.assign(n, -1);
  return tb;
}

}  // namespace

Solution solve_backward(std::shared_ptr<const MdpInstance> instance, const SolveOptions& opts) {
  const MdpModel model(instance);
  const auto& m = model.instance();
  Tables tb = allocate_tables(m);
  const long per_t = static_cast<long>(m.n_nodes) * m.n_bins;
  const int threads = thread_count(opts);
  (void)threads;
  for (int t = m.horizon - 1; t >= 0; --t) {
    const std::size_t base = static_cast<std::size_t>(t) * per_t;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long k = 0; k < per_t; ++k) {
      const auto i = static_cast<NodeIndex>(k / m.n_bins);
      const int b = static_cast<int>(k % m.n_bins);
      tb.values[base + k] = decide(model, tb, t, i, b, tb.best[base + k], tb.second[base + k]);
    }
#pragma omp parallel for schedule(static) num_threads(threads)
    for (long k = 0; k < per_t; ++k) {
      const auto j = static_cast<NodeIndex>(k / m.n_bins);
      const int b = static_cast<int>(k % m.n_bins);
      tb.arrival[base + k] = arrival_at(model, tb, t, j, b);
    }
  }
  return Solution(std::move(instance), std::move(tb.values), std::move(tb.arrival),
                  std::move(tb.best), std::move(tb.second));
}

Solution solution_from_values(std::shared_ptr<const MdpInstance> instance,
                              std::vector<double> values, const SolveOptions& opts) {
  const MdpModel model(instance);
  const auto& m = model.instance();
  Tables tb = allocate_tables(m);
  if (values.size() != tb.values.size()) {
    throw DataError("stored values do not match the instance dimensions");
  }
  tb.values = std::move(values);
  const long total = static_cast<long>(tb.values.size());
  const long per_t = static_cast<long>(m.n_nodes) * m.n_bins;
  const int threads = thread_count(opts);
  (void)threads;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long k = 0; k < total; ++k) {
    const int t = static_cast<int>(k / per_t);
    const auto j = static_cast<NodeIndex>((k % per_t) / m.n_bins);
    tb.arrival[k] = arrival_at(model, tb, t, j, static_cast<int>(k % m.n_bins));
  }
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long k = 0; k < total; ++k) {
    const int t = static_cast<int>(k / per_t);
    const auto i = static_cast<NodeIndex>((k % per_t) / m.n_bins);
    decide(model, tb, t, i, static_cast<int>(k % m.n_bins), tb.best[k], tb.second[k]);
  }
  return Solution(std::move(instance), std::move(tb.values), std::move(tb.arrival),
                  std::move(tb.best), std::move(tb.second));
}

// ---------------------------------------------------------------------------
// Compiling

void SolverConfig::validate() const {
  if (horizon_min < 0) throw ConfigError("horizon must be non-negative");
  if (start_clock_min < 0 || start_clock_min >= kMinutesPerDay) {
    throw ConfigError("start clock must be a minute of the day");
  }
  if (!(battery_bin_fraction > 0.0 && battery_bin_fraction <= 0.5)) {
    throw ConfigError("battery bin fraction must be in (0, 0.5]");
  }
  if (tau_set.empty() || tau_set.front() != 0) {
    throw ConfigError("charging durations must include 0 as the first entry");
  }
  for (std::size_t k = 1; k < tau_set.size(); ++k) {
    if (tau_set[k] <= tau_set[k - 1]) throw ConfigError("charging durations must be ascending");
  }
  if (aggregation_k == 0) throw ConfigError("aggregation K must be positive");
}

std::vector<NodeIndex> select_solver_nodes(const DemandModel& demand, std::size_t k) {
  std::vector<NodeIndex> order(demand.n_junctions);
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
    return demand.pickups_total[a] > demand.pickups_total[b];
  });
  if (order.size() > k) order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

MdpInstance compile_instance(const ModelInputs& in, const SolverConfig& config) {
  config.validate();
  if (!in.network || !in.demand) throw ConfigError("network and demand model are required");
  const bool electric = config.powertrain == Powertrain::Electric;
  if (electric && !in.stations) throw ConfigError("electric taxis need charging stations");
  in.energy.validate();
  in.battery.validate();
  in.tariff.validate();
  in.price.validate();
  const auto& net = *in.network;
  const auto& graph = net.graph();
  const auto& demand = *in.demand;
  if (demand.n_junctions != graph.size()) throw DataError("demand model does not match the graph");

  MdpInstance m;
  m.horizon = config.horizon_min;
  m.start_clock_min = config.start_clock_min;
  m.unpriced_trip_energy = config.unpriced_trip_energy;
  m.usd_per_kwh = in.price.per_kwh(config.powertrain);
  m.charge_rate_kw = in.charging.rate_kw;
  if (electric) {
    m.battery_limited = true;
    const double span = in.battery.high_fraction - in.battery.low_fraction;
    m.n_bins = std::max(2, static_cast<int>(std::lround(span / config.battery_bin_fraction)) + 1);
    m.battery_low_kwh = in.battery.low();
    m.bin_kwh = (in.battery.high() - in.battery.low()) / (m.n_bins - 1);
    m.tau_set = config.tau_set;
  } else {
    m.battery_limited = false;
    m.n_bins = 1;
    m.bin_kwh = 1.0;
    m.tau_set = {0};
  }

  // Solver nodes and their junctions.
  std::vector<NodeIndex> junction_of;
  if (config.full_adjacency) {
    junction_of.resize(graph.size());
    std::iota(junction_of.begin(), junction_of.end(), NodeIndex{0});
  } else {
    junction_of = select_solver_nodes(demand, config.aggregation_k);
  }
  if (junction_of.empty()) throw DataError("graph has no junctions");
  const NodeIndex n = static_cast<NodeIndex>(junction_of.size());
  m.n_nodes = static_cast<int>(n);
  m.allocate();
  for (NodeIndex i = 0; i < n; ++i) m.node_ids[i] = graph.junction(junction_of[i]).id;

  if (config.full_adjacency) {
    for (NodeIndex i = 0; i < n; ++i) {
      auto& tg = m.targets[i];
      tg.push_back(i);
      for (auto e : graph.out_edges(i)) tg.push_back(graph.edges()[e].to);
      std::sort(tg.begin(), tg.end());
      tg.erase(std::unique(tg.begin(), tg.end()), tg.end());
    }
  } else {
    for (NodeIndex i = 0; i < n; ++i) {
      m.targets[i].resize(n);
      std::iota(m.targets[i].begin(), m.targets[i].end(), NodeIndex{0});
    }
  }

  // Every junction maps to its nearest solver node for destinations.
  std::vector<NodeIndex> node_of(graph.size());
  for (NodeIndex g = 0; g < graph.size(); ++g) {
    double best = kInf;
    for (NodeIndex i = 0; i < n; ++i) {
      const double d = haversine_km(graph.junction(g).pos, graph.junction(junction_of[i]).pos);
      if (d < best) {
        best = d;
        node_of[g] = i;
      }
    }
  }

  // Shortest paths between solver nodes, and from each station to each node.
  std::vector<std::optional<Path>> paths(static_cast<std::size_t>(n) * n);
  std::vector<std::optional<Path>> from_station;
  std::vector<std::optional<Path>> to_station(n);
  const std::size_t n_stations = electric ? in.stations->stations().size() : 0;
  if (electric) from_station.resize(n_stations * n);
  for (NodeIndex j = 0; j < n; ++j) {
    const DistanceTree tree(graph, junction_of[j]);
    for (NodeIndex i = 0; i < n; ++i) paths[i * n + j] = tree.path_from(junction_of[i]);
    for (std::size_t st = 0; st < n_stations; ++st) {
      from_station[st * n + j] = tree.path_from(in.stations->stations()[st].junction);
    }
  }
  if (electric) {
    for (NodeIndex i = 0; i < n; ++i) {
      const auto& near = in.stations->nearest(junction_of[i]);
      if (!near.reachable()) continue;
      m.station_of[i] = near.station;
      to_station[i] = in.stations->path_to_nearest(graph, junction_of[i]);
    }
  }

  for (int s = 0; s < m.n_slots; ++s) {
    const int minute = s * m.slot_minutes;
    for (NodeIndex i = 0; i < n; ++i) {
      for (NodeIndex j = 0; j < n; ++j) {
        const auto p = m.pair(s, i, j);
        const auto& path = paths[i * n + j];
        if (!path) {
          m.travel_min[p] = -1;
          m.energy_kwh[p] = kInf;
          m.distance_km[p] = kInf;
          continue;
        }
        const auto est = net.travel(*path, minute);
        m.travel_min[p] = est.slots;
        m.energy_kwh[p] = trip_energy_kwh(in.energy, est);
        m.distance_km[p] = path->km;
        m.gross_fare[p] = fare(in.tariff, net, *path, minute, config.peak_eligible);
      }
      if (electric) {
        const auto c = m.node(s, i);
        if (m.station_of[i] < 0 || !to_station[i]) {
          m.to_station_min[c] = -1;
          m.to_station_kwh[c] = kInf;
          m.to_station_km[c] = kInf;
        } else {
          const auto est = net.travel(*to_station[i], minute);
          m.to_station_min[c] = est.slots;
          m.to_station_kwh[c] = trip_energy_kwh(in.energy, est);
          m.to_station_km[c] = to_station[i]->km;
        }
        for (NodeIndex j = 0; j < n; ++j) {
          const auto p = m.pair(s, i, j);
          const std::optional<Path>* leg =
              m.station_of[i] < 0 ? nullptr : &from_station[m.station_of[i] * n + j];
          if (!leg || !*leg) {
            m.from_station_min[p] = -1;
            m.from_station_kwh[p] = kInf;
            m.from_station_km[p] = kInf;
            continue;
          }
          const auto est = net.travel(**leg, minute);
          m.from_station_min[p] = est.slots;
          m.from_station_kwh[p] = trip_energy_kwh(in.energy, est);
          m.from_station_km[p] = (*leg)->km;
        }
      }
      // Demand at the node's own junction; destinations merged onto nodes.
      const int hour = (minute / 60) % kHoursPerDay;
      const auto c = m.node(s, i);
      const auto dc = demand.cell(hour, junction_of[i]);
      m.pickup_prob[c] = demand.pickup_prob[dc];
      m.pickup_count[c] = demand.pickup_count[dc];
      m.competitor_count[c] = demand.competitor_count[dc];
      std::vector<double> mass(n, 0.0);
      for (const auto& e : demand.dest[dc]) mass[node_of[e.dest]] += e.prob;
      for (NodeIndex k = 0; k < n; ++k) {
        if (mass[k] > 0.0) m.dest[c].push_back({k, mass[k]});
      }
    }
  }
  m.validate();
  return m;
}

}  // namespace etaxi
