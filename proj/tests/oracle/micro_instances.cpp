#include "micro_instances.hpp"

#include <random>

namespace etaxi::testing {

MdpInstance random_micro_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto chance = [&](double p) { return real(0.0, 1.0) < p; };

  MdpInstance m;
  m.n_nodes = uniform(1, 4);
  m.horizon = uniform(1, 6);
  m.step_minutes = 15;
  m.slot_minutes = 15;
  m.n_slots = 6;
  m.start_clock_min = 0;
  m.battery_limited = true;
  m.n_bins = uniform(2, 3);
  m.bin_kwh = 1.0;
  m.battery_low_kwh = 1.5;
  m.tau_set = {0, 15};
  m.charge_rate_kw = chance(0.5) ? 4.0 : 8.0;
  m.usd_per_kwh = 0.2;
  m.unpriced_trip_energy = chance(0.25);
  m.allocate();

  const auto n = static_cast<NodeIndex>(m.n_nodes);
  for (NodeIndex i = 0; i < n; ++i) {
    m.node_ids[i] = 100 + i;
    for (NodeIndex j = 0; j < n; ++j) m.targets[i].push_back(j);
    m.station_of[i] = chance(0.85) ? uniform(0, 1) : -1;
  }
  const double energies[] = {0.0, 0.4, 0.9, 1.0, 1.6, 2.3};
  for (int s = 0; s < m.n_slots; ++s) {
    for (NodeIndex i = 0; i < n; ++i) {
      const auto c = m.node(s, i);
      m.to_station_min[c] = uniform(0, 1);
      m.to_station_kwh[c] = chance(0.3) ? 0.0 : energies[uniform(0, 3)];
      m.to_station_km[c] = real(0.0, 2.0);
      for (NodeIndex j = 0; j < n; ++j) {
        const auto p = m.pair(s, i, j);
        if (i != j && chance(0.08)) {
          m.travel_min[p] = -1;
          m.energy_kwh[p] = kInf;
          m.distance_km[p] = kInf;
        } else {
          m.travel_min[p] = i == j ? 0 : uniform(1, 2);
          m.energy_kwh[p] = i == j ? 0.0 : energies[uniform(0, 5)];
          m.distance_km[p] = i == j ? 0.0 : real(0.5, 4.0);
          m.gross_fare[p] = real(3.0, 15.0);
        }
        m.from_station_min[p] = uniform(0, 2);
        m.from_station_kwh[p] = energies[uniform(0, 4)];
        m.from_station_km[p] = real(0.0, 3.0);
      }
      const double roll = real(0.0, 1.0);
      m.pickup_prob[c] = roll < 0.2 ? 0.0 : roll > 0.9 ? 1.0 : real(0.0, 1.0);
      m.pickup_count[c] = uniform(0, 10);
      m.competitor_count[c] = uniform(0, 10);
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) {
        x = chance(0.6) ? real(0.1, 1.0) : 0.0;
        total += x;
      }
      if (total == 0.0) continue;
      for (NodeIndex k = 0; k < n; ++k) {
        if (w[k] > 0.0) m.dest[c].push_back({k, w[k] / total});
      }
    }
  }
  return m;
}

}  // namespace etaxi::testing
