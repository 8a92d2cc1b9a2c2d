#include "etaxi/fleet_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "etaxi/csv.hpp"

namespace etaxi {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

namespace {

constexpr double kSocEps = 1e-9;

class Taxi {
 public:
  Taxi(const Solution& sol, StartState start) : sol_(&sol), t(start.t), node(start.node), bin(start.bin) {
    const auto& m = sol.instance();
    if (start.node >= static_cast<NodeIndex>(m.n_nodes) || start.bin < 0 || start.bin >= m.n_bins ||
        start.t < 0) {
      throw DataError("start state is outside the policy's state space");
    }
    result.start = start;
    soc_ = m.level_kwh(bin);
    initial_usable_ = m.battery_limited ? soc_ - m.battery_low_kwh : kInf;
  }

  /// Applies the action; returns false when the shift is over.
  bool act(NodeIndex target, int tau_index, const Transition& tr) {
    const auto& m = sol_->instance();
    const int tau = m.tau_set[tau_index];
    ++result.decisions;
    result.net_revenue -= tr.cost_usd;
    result.energy_cost += tr.cost_usd;
    result.energy_kwh += tr.driven_kwh;
    result.charged_kwh += tr.purchased_kwh;
    result.total_km += tr.km;
    if (tau > 0) {
      result.charge_events.push_back({tr.station_arrive_t, tr.station, tau, tr.purchased_kwh});
      soc_ -= tr.first_leg_kwh;
      check(tr.bin_before_charge);
      soc_ = std::min(soc_ + tr.purchased_kwh, m.level_kwh(m.n_bins - 1));
      soc_ -= tr.driven_kwh - tr.first_leg_kwh;
    } else {
      soc_ -= tr.driven_kwh;
    }
    check(tr.arrive_bin);
    t = tr.arrive_t;
    node = target;
    bin = tr.arrive_bin;
    return t < m.horizon;
  }

  /// Pick-up draw at the current node with probability p; returns false when
  /// the shift is over.
  bool arrive(double p, std::mt19937_64& rng) {
    const auto& m = sol_->instance();
    const double u_pick = uniform01(rng);
    const double u_dest = uniform01(rng);
    if (u_pick >= p) return true;
    const auto& row = m.dest[m.node(m.slot_at(t), node)];
    double cum = 0.0;
    const MdpInstance::Destination* chosen = nullptr;
    for (const auto& d : row) {
      cum += d.prob;
      if (u_dest < cum) {
        chosen = &d;
        break;
      }
    }
    if (!chosen && !row.empty() && cum > 1.0 - 1e-9) chosen = &row.back();
    if (!chosen) return true;
    const auto del = sol_->model().delivery(t, node, bin, chosen->node);
    if (!del.feasible) return true;
    ++result.trips_served;
    result.net_revenue += del.net_revenue;
    result.gross_fare += del.gross_fare;
    result.energy_cost += del.energy_kwh * m.usd_per_kwh;
    result.energy_kwh += del.energy_kwh;
    result.delivery_km += del.km;
    result.total_km += del.km;
    soc_ -= del.energy_kwh;
    check(del.arrive_bin);
    t = del.arrive_t;
    node = chosen->node;
    bin = del.arrive_bin;
    return t < m.horizon;
  }

  void finish() {
    const auto& m = sol_->instance();
    const int end = std::min(t, m.horizon);
    result.hours_worked = std::max(0, end - result.start.t) * m.step_minutes / 60.0;
    result.energy_from_battery_kwh = std::min(result.energy_kwh, initial_usable_);
    result.energy_from_charging_kwh = result.energy_kwh - result.energy_from_battery_kwh;
  }

  ShiftResult result;
  const Solution* sol_;
  int t;
  NodeIndex node;
  int bin;

 private:
  void check(int b) {
    const auto& m = sol_->instance();
    if (!m.battery_limited) return;
    const bool bin_ok = b >= 0 && b < m.n_bins;
    const bool soc_ok = soc_ >= m.battery_low_kwh - kSocEps &&
                        soc_ <= m.level_kwh(m.n_bins - 1) + kSocEps;
    if (!bin_ok || !soc_ok) ++result.battery_violations;
  }

  double soc_ = 0.0;
  double initial_usable_ = 0.0;
};

double base_pickup(const MdpInstance& m, int t, NodeIndex j) {
  return m.pickup_prob[m.node(m.slot_at(t), j)];
}

}  // namespace

ShiftResult rollout_single(const Solution& sol, StartState start, std::uint64_t seed) {
  const auto& m = sol.instance();
  auto rng = make_stream(seed, 0);
  Taxi taxi(sol, start);
  while (taxi.t < m.horizon) {
    if (sol.dead(taxi.t, taxi.node, taxi.bin)) {
      ++taxi.result.dead_state_entries;
      break;
    }
    const auto a = *sol.best_action(taxi.t, taxi.node, taxi.bin);
    const int k = sol.model().tau_index(a.tau_min);
    const auto tr = sol.model().transition(taxi.t, taxi.node, taxi.bin, a.target, k);
    if (!taxi.act(a.target, k, tr)) break;
    if (!taxi.arrive(base_pickup(m, taxi.t, taxi.node), rng)) break;
  }
  taxi.finish();
  return taxi.result;
}

std::vector<ShiftResult> rollout_batch(const Solution& sol, StartState start, std::size_t n,
                                       std::uint64_t seed, int threads) {
  std::vector<ShiftResult> results(n);
  const long count = static_cast<long>(n);
#ifdef _OPENMP
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(nt)
#else
  (void)threads;
#endif
  for (long k = 0; k < count; ++k) results[k] = rollout_single(sol, start, seed + k);
  return results;
}

MonteCarloSummary run_rollouts(const Solution& sol, StartState start, std::size_t n,
                               std::uint64_t seed, int threads) {
  return summarize(rollout_batch(sol, start, n, seed, threads));
}

MonteCarloSummary summarize(std::span<const ShiftResult> results) {
  const std::size_t n = results.size();
  MonteCarloSummary s;
  s.net_revenue.reserve(n);
  for (const auto& r : results) {
    s.net_revenue.push_back(r.net_revenue);
    s.mean += r.net_revenue;
    s.mean_gross_fare += r.gross_fare;
    s.mean_energy_cost += r.energy_cost;
    s.battery_violations += r.battery_violations;
    s.dead_state_entries += r.dead_state_entries;
  }
  if (n == 0) return s;
  s.mean /= n;
  s.mean_gross_fare /= n;
  s.mean_energy_cost /= n;
  if (n > 1) {
    double ss = 0.0;
    for (double v : s.net_revenue) ss += (v - s.mean) * (v - s.mean);
    s.std_error = std::sqrt(ss / (n - 1) / n);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Fleet

void FleetConfig::validate(const MdpInstance& m) const {
  if (n_taxis < 1) throw ConfigError("fleet needs at least one taxi");
  if (!capacity.empty() && capacity.size() != static_cast<std::size_t>(m.n_nodes)) {
    throw ConfigError("capacity map does not match the solver nodes");
  }
  for (int c : capacity) {
    if (c < 0) throw ConfigError("capacities must be positive (0 = unlimited)");
  }
}

FleetResult rollout_fleet(const Solution& sol, const FleetConfig& config) {
  const auto& m = sol.instance();
  config.validate(m);
  const std::size_t n = config.n_taxis;

  std::vector<StartState> starts(n, config.start);
  if (!config.start_pool.empty()) {
    auto pick = make_stream(config.seed, 0xFFFFFFFFull);
    for (std::size_t k = 1; k < n; ++k) {
      starts[k] = config.start_pool[std::uniform_int_distribution<std::size_t>(
          0, config.start_pool.size() - 1)(pick)];
    }
  }

  enum class Phase { Decide, Arrive, Done };
  std::vector<Taxi> taxis;
  std::vector<std::mt19937_64> rngs;
  std::vector<Phase> phase(n, Phase::Decide);
  std::vector<NodeIndex> holding(n, kNoNode);
  taxis.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    taxis.emplace_back(sol, starts[k]);
    rngs.push_back(make_stream(config.seed, k));
    if (starts[k].t >= m.horizon) phase[k] = Phase::Done;
  }

  FleetResult out;
  std::vector<int> occupancy(m.n_nodes, 0);
  out.peak_occupancy.assign(m.n_nodes, 0);
  auto cap = [&](NodeIndex j) {
    return config.capacity.empty() || config.capacity[j] == 0 ? std::numeric_limits<int>::max()
                                                              : config.capacity[j];
  };

  for (int now = 0; now < m.horizon; ++now) {
    for (std::size_t k = 0; k < n; ++k) {
      auto& taxi = taxis[k];
      while (phase[k] != Phase::Done && taxi.t == now) {
        if (phase[k] == Phase::Arrive) {
          const NodeIndex j = taxi.node;
          const int present = occupancy[j];
          double p = base_pickup(m, now, j);
          if (present > 1) {
            const auto c = m.node(m.slot_at(now), j);
            const double denom = m.pickup_count[c] + m.competitor_count[c] + (present - 1);
            p = denom > 0.0 ? m.pickup_count[c] / denom : 0.0;
          }
          --occupancy[holding[k]];
          holding[k] = kNoNode;
          phase[k] = taxi.arrive(p, rngs[k]) ? Phase::Decide : Phase::Done;
          continue;
        }
        if (sol.dead(now, taxi.node, taxi.bin)) {
          ++taxi.result.dead_state_entries;
          phase[k] = Phase::Done;
          break;
        }
        std::optional<ActionRef> chosen;
        const auto best = *sol.best_action(now, taxi.node, taxi.bin);
        if (occupancy[best.target] < cap(best.target)) {
          chosen = best;
        } else {
          for (const auto& ra : sol.best_actions(now, taxi.node, taxi.bin)) {
            if (occupancy[ra.action.target] < cap(ra.action.target)) {
              chosen = ra.action;
              break;
            }
          }
        }
        if (!chosen) {
          ++out.blocked_stalls;
          taxi.t = now + 1;
          if (taxi.t >= m.horizon) phase[k] = Phase::Done;
          break;
        }
        const int a = sol.model().tau_index(chosen->tau_min);
        const auto tr = sol.model().transition(now, taxi.node, taxi.bin, chosen->target, a);
        holding[k] = chosen->target;
        if (++occupancy[chosen->target] > cap(chosen->target)) ++out.capacity_violations;
        out.peak_occupancy[chosen->target] =
            std::max(out.peak_occupancy[chosen->target], occupancy[chosen->target]);
        if (taxi.act(chosen->target, a, tr)) {
          phase[k] = Phase::Arrive;
        } else {
          --occupancy[holding[k]];
          holding[k] = kNoNode;
          phase[k] = Phase::Done;
        }
      }
    }
  }
  out.taxis.reserve(n);
  for (auto& taxi : taxis) {
    taxi.finish();
    out.taxis.push_back(std::move(taxi.result));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Capacities

std::vector<int> junction_capacity_from_data(std::span<const SnappedTrip> trips,
                                             std::size_t n_junctions, double max_gap_min) {
  std::map<std::string, std::vector<const SnappedTrip*>> by_taxi;
  for (const auto& t : trips) by_taxi[t.taxi_id].push_back(&t);
  std::vector<std::vector<std::pair<WallMinute, int>>> events(n_junctions);
  for (auto& [_, list] : by_taxi) {
    std::stable_sort(list.begin(), list.end(), [](const SnappedTrip* a, const SnappedTrip* b) {
      return a->pickup_time < b->pickup_time;
    });
    for (std::size_t k = 0; k + 1 < list.size(); ++k) {
      const WallMinute from = list[k]->dropoff_time();
      const WallMinute to = list[k + 1]->pickup_time;
      if (to <= from || static_cast<double>(to - from) > max_gap_min) continue;
      events[list[k]->dest].push_back({from, +1});
      events[list[k]->dest].push_back({to, -1});
    }
  }
  std::vector<int> cap(n_junctions, 1);
  for (std::size_t j = 0; j < n_junctions; ++j) {
    auto& ev = events[j];
    if (ev.empty()) continue;
    std::sort(ev.begin(), ev.end());  // departures (-1) sort before arrivals at equal times
    double presence = 0.0, occupied = 0.0;
    int count = 0;
    for (std::size_t e = 0; e < ev.size(); ++e) {
      count += ev[e].second;
      if (e + 1 < ev.size() && count > 0) {
        const double dt = static_cast<double>(ev[e + 1].first - ev[e].first);
        presence += count * dt;
        occupied += dt;
      }
    }
    if (occupied > 0.0) {
      cap[j] = std::max(1, static_cast<int>(std::ceil(presence / occupied - 1e-9)));
    }
  }
  return cap;
}

CapacityMap node_capacities(const MdpInstance& m, const RoadGraph& graph,
                            std::span<const int> junction_capacity) {
  if (junction_capacity.size() != graph.size()) {
    throw DataError("capacity list does not match the graph");
  }
  CapacityMap out(m.n_nodes);
  for (int i = 0; i < m.n_nodes; ++i) {
    const auto g = graph.index_of(m.node_ids[i]);
    if (!g) throw DataError("solver node missing from the graph");
    out[i] = junction_capacity[*g];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

EmissionReport emission_report(double energy_kwh, Powertrain powertrain, double kwh_per_gallon) {
  EmissionReport r;
  if (powertrain == Powertrain::Electric) {
    r.electricity_kwh = energy_kwh;
  } else {
    r.gasoline_liters = energy_kwh / kwh_per_gallon * kLitersPerGallon;
  }
  r.co2_kg = kGridCo2KgPerKwh * r.electricity_kwh + kGasolineCo2KgPerLiter * r.gasoline_liters;
  return r;
}

EmissionReport emission_report(std::span<const ShiftResult> results, Powertrain powertrain,
                               double kwh_per_gallon) {
  double kwh = 0.0;
  for (const auto& r : results) kwh += r.energy_kwh;
  return emission_report(kwh, powertrain, kwh_per_gallon);
}

double replay_energy_cost(const ShiftResult& r, double usd_per_kwh) {
  return (r.energy_kwh + r.charged_kwh) * usd_per_kwh;
}

std::vector<PriceRow> gas_price_sensitivity(const MdpInstance& ice, std::span<const double> prices,
                                            StartState start, std::size_t n_rollouts,
                                            std::uint64_t seed, double kwh_per_gallon,
                                            int threads) {
  if (ice.battery_limited) throw ConfigError("gas price sensitivity needs an ICE instance");
  std::vector<PriceRow> rows;
  for (double price : prices) {
    if (!(price >= 0.0)) throw ConfigError("gas prices must be non-negative");
    auto m = std::make_shared<MdpInstance>(ice);
    m->usd_per_kwh = price / kwh_per_gallon;
    const auto sol = solve_backward(m, {threads});
    const auto mc = run_rollouts(sol, start, n_rollouts, seed, threads);
    rows.push_back({price, sol.value(start.t, start.node, start.bin), mc.mean, mc.std_error,
                    mc.mean_gross_fare, mc.mean_energy_cost});
  }
  return rows;
}

void write_results_csv(std::ostream& out, std::span<const ShiftResult> results,
                       const MdpInstance& m) {
  using csv::format_double;
  out << "taxi,start_junction,start_t,start_bin,net_revenue_usd,gross_fare_usd,energy_cost_usd,"
         "delivery_km,total_km,energy_kwh,energy_from_battery_kwh,energy_from_charging_kwh,"
         "charged_kwh,charge_events,trips_served,hours_worked,battery_violations,"
         "dead_state_entries\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    out << k << ',' << m.node_ids[r.start.node] << ',' << r.start.t << ',' << r.start.bin << ','
        << format_double(r.net_revenue) << ',' << format_double(r.gross_fare) << ','
        << format_double(r.energy_cost) << ',' << format_double(r.delivery_km) << ','
        << format_double(r.total_km) << ',' << format_double(r.energy_kwh) << ','
        << format_double(r.energy_from_battery_kwh) << ','
        << format_double(r.energy_from_charging_kwh) << ',' << format_double(r.charged_kwh) << ','
        << r.charge_events.size() << ',' << r.trips_served << ',' << format_double(r.hours_worked)
        << ',' << r.battery_violations << ',' << r.dead_state_entries << '\n';
  }
}

nlohmann::ordered_json results_summary(std::span<const ShiftResult> results, const MdpInstance& m,
                                       Powertrain powertrain) {
  using json = nlohmann::ordered_json;
  std::vector<double> net;
  double gross = 0, cost = 0, kwh = 0, from_batt = 0, from_chg = 0, charged = 0, dkm = 0, tkm = 0;
  long trips = 0, events = 0, violations = 0, dead = 0;
  for (const auto& r : results) {
    net.push_back(r.net_revenue);
    gross += r.gross_fare;
    cost += r.energy_cost;
    kwh += r.energy_kwh;
    from_batt += r.energy_from_battery_kwh;
    from_chg += r.energy_from_charging_kwh;
    charged += r.charged_kwh;
    dkm += r.delivery_km;
    tkm += r.total_km;
    trips += r.trips_served;
    events += static_cast<long>(r.charge_events.size());
    violations += r.battery_violations;
    dead += r.dead_state_entries;
  }
  const std::size_t n = net.size();
  double mean = 0.0, se = 0.0;
  for (double v : net) mean += v;
  if (n) mean /= n;
  if (n > 1) {
    double ss = 0.0;
    for (double v : net) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / (n - 1) / n);
  }
  std::sort(net.begin(), net.end());
  auto q = [&](double f) { return n ? net[static_cast<std::size_t>(f * (n - 1) + 0.5)] : 0.0; };
  const auto em = emission_report(results, powertrain);
  json j;
  j["shifts"] = n;
  j["powertrain"] = to_string(powertrain);
  j["horizon_steps"] = m.horizon;
  j["net_revenue"] = {{"mean", mean}, {"std_error", se},   {"min", q(0.0)}, {"p25", q(0.25)},
                      {"median", q(0.5)}, {"p75", q(0.75)}, {"max", q(1.0)}};
  j["totals"] = {{"gross_fare_usd", gross},     {"energy_cost_usd", cost}, {"delivery_km", dkm},
                 {"total_km", tkm},             {"trips_served", trips},   {"charge_events", events},
                 {"charged_kwh", charged}};
  j["energy"] = {{"total_kwh", kwh}, {"from_battery_kwh", from_batt}, {"from_charging_kwh", from_chg}};
  j["emissions"] = {{"electricity_kwh", em.electricity_kwh},
                    {"gasoline_liters", em.gasoline_liters},
                    {"co2_kg", em.co2_kg}};
  j["safety"] = {{"battery_violations", violations}, {"dead_state_entries", dead}};
  return j;
}

}  // namespace etaxi
