#include "etaxi/energy_model.hpp"

#include <algorithm>
#include <cmath>

namespace etaxi {

void EnergyParams::validate() const {
  if (!(beta > 0.0)) throw ConfigError("energy.beta must be positive");
  if (!(aux_load_kw >= 0.0)) throw ConfigError("energy.aux_load_kw must be non-negative");
}

void Battery::validate() const {
  if (!(capacity_kwh > 0.0)) throw ConfigError("battery capacity must be positive");
  if (!(low_fraction >= 0.0 && low_fraction < high_fraction && high_fraction <= 1.0)) {
    throw ConfigError("battery bounds must satisfy 0 <= low < high <= 1");
  }
}

double moving_wh_per_km(const EnergyParams& p, double v) {
  return std::max(0.0, p.alpha1 * v * v + p.alpha2 * v + p.alpha3);
}

double moving_energy_wh(const EnergyParams& p, double speed_kmh, double distance_km) {
  return p.beta * moving_wh_per_km(p, speed_kmh) * distance_km;
}

double aux_energy_wh(const EnergyParams& p, double total_min) {
  return p.aux_load_kw * total_min / 60.0 * 1000.0;
}

double trip_energy_kwh(const EnergyParams& p, const TravelEstimate& est) {
  if (est.distance_km <= 0.0 && est.total_min <= 0.0) return 0.0;
  double moving = 0.0;
  if (est.distance_km > 0.0 && est.driving_min > 0.0) {
    const double v = est.distance_km / (est.driving_min / 60.0);
    moving = moving_energy_wh(p, v, est.distance_km);
  }
  return (moving + aux_energy_wh(p, est.total_min)) / 1000.0;
}

double trip_energy_kwh(const EnergyParams& p, const SpeedNetwork& net, NodeIndex i, NodeIndex j,
                       int minute) {
  return trip_energy_kwh(p, net.travel_time(i, j, minute));
}

double reserve_energy_kwh(const EnergyParams& p, const SpeedNetwork& net,
                          const StationTable& stations, NodeIndex i, int minute) {
  const auto path = stations.path_to_nearest(net.graph(), i);
  if (!path) return kInf;
  return trip_energy_kwh(p, net.travel(*path, minute));
}

double apply_charge(double soc_kwh, double tau_min, double rate_kw, const Battery& battery) {
  if (tau_min <= 0.0) return soc_kwh;
  return std::min(soc_kwh + charge_energy_kwh(tau_min, rate_kw), battery.high());
}

double battery_transition(double soc_kwh, double tau_min, const ActionLegs& legs, double rate_kw,
                          const Battery& battery) {
  double b = soc_kwh;
  if (tau_min <= 0.0) {
    b -= legs.direct_kwh;
  } else {
    b -= legs.to_station_kwh;
    if (b < battery.low()) throw InfeasibleError("battery below floor before reaching station");
    b = apply_charge(b, tau_min, rate_kw, battery) - legs.from_station_kwh;
  }
  if (b < battery.low()) throw InfeasibleError("battery below floor on arrival");
  return b;
}

double battery_transition(double soc_kwh, NodeIndex i, NodeIndex j, double tau_min, int minute,
                          const EnergyParams& p, const SpeedNetwork& net,
                          const StationTable& stations, double rate_kw, const Battery& battery) {
  ActionLegs legs;
  if (tau_min <= 0.0) {
    legs.direct_kwh = trip_energy_kwh(p, net, i, j, minute);
  } else {
    const auto to_station = stations.path_to_nearest(net.graph(), i);
    if (!to_station) throw InfeasibleError("no charging station reachable");
    const auto leg1 = net.travel(*to_station, minute);
    legs.to_station_kwh = trip_energy_kwh(p, leg1);
    const NodeIndex r = to_station->nodes.back();
    const int depart = minute + leg1.slots + static_cast<int>(std::lround(tau_min));
    legs.from_station_kwh = trip_energy_kwh(p, net, r, j, depart);
  }
  return battery_transition(soc_kwh, tau_min, legs, rate_kw, battery);
}

}  // namespace etaxi
