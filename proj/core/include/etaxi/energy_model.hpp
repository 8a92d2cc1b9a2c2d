#pragma once

#include "etaxi/road_network.hpp"

namespace etaxi {

/// Speed-dependent consumption curve (Wh/km as a quadratic in km/h), driver
/// aggressiveness multiplier and auxiliary load. Defaults are the Nissan Leaf
/// coefficients.
struct EnergyParams {
  double alpha1 = 0.1554;    ///< Wh/km per (km/h)^2
  double alpha2 = -5.4634;   ///< Wh/km per km/h
  double alpha3 = 189.297;   ///< Wh/km
  double beta = 1.0;         ///< 0.8 mild, 1.0 normal, 1.2 aggressive
  double aux_load_kw = 1.5;

  void validate() const;
};

inline constexpr double kBetaMild = 0.8;
inline constexpr double kBetaNormal = 1.0;
inline constexpr double kBetaAggressive = 1.2;

/// Quadratic consumption at speed v before beta scaling, clamped at 0 (Wh/km).
double moving_wh_per_km(const EnergyParams& p, double speed_kmh);

/// Moving energy (Wh) for `distance_km` driven at average speed `speed_kmh`.
double moving_energy_wh(const EnergyParams& p, double speed_kmh, double distance_km);

/// Auxiliary energy (Wh) over `total_min` minutes of operation.
double aux_energy_wh(const EnergyParams& p, double total_min);

/// Energy of a trip from its travel estimate: the path-average speed is
/// D / T^d and the auxiliary load runs over T^t. Result in kWh.
double trip_energy_kwh(const EnergyParams& p, const TravelEstimate& est);

/// Routes i -> j at clock minute `minute`. Throws NoPathError.
double trip_energy_kwh(const EnergyParams& p, const SpeedNetwork& net, NodeIndex i, NodeIndex j,
                       int minute);

/// Energy to reach r(i) departing at `minute`; +inf when no station is reachable.
double reserve_energy_kwh(const EnergyParams& p, const SpeedNetwork& net,
                          const StationTable& stations, NodeIndex i, int minute);

struct Battery {
  double capacity_kwh = 30.0;
  double low_fraction = 0.05;
  double high_fraction = 0.95;

  double low() const { return capacity_kwh * low_fraction; }
  double high() const { return capacity_kwh * high_fraction; }
  void validate() const;
};

inline constexpr double kMode3RateKw = 6.6;
inline constexpr double kFastDcRateKw = 50.0;

struct ChargingSpec {
  ChargeMode mode = ChargeMode::Mode3;
  double rate_kw = kMode3RateKw;

  static ChargingSpec of(ChargeMode m) {
    return {m, m == ChargeMode::Mode3 ? kMode3RateKw : kFastDcRateKw};
  }
};

/// Energy purchased over `tau_min` minutes at `rate_kw`, kWh.
inline double charge_energy_kwh(double tau_min, double rate_kw) { return tau_min / 60.0 * rate_kw; }

/// min(soc + tau*C, B_high).
double apply_charge(double soc_kwh, double tau_min, double rate_kw, const Battery& battery);

/// Energies of the legs an action may drive.
struct ActionLegs {
  double direct_kwh = 0.0;        ///< i -> j (tau == 0)
  double to_station_kwh = 0.0;    ///< i -> r(i)
  double from_station_kwh = 0.0;  ///< r(i) -> j
};

/// Battery level on arrival at j. tau == 0: soc - E(i,j). tau > 0: the taxi
/// drives to r(i), charges, then drives to j. Throws InfeasibleError when the
/// level would drop below B_low at any point.
double battery_transition(double soc_kwh, double tau_min, const ActionLegs& legs,
                          double rate_kw, const Battery& battery);

/// Network version: evaluates the legs at the times they are driven.
double battery_transition(double soc_kwh, NodeIndex i, NodeIndex j, double tau_min, int minute,
                          const EnergyParams& p, const SpeedNetwork& net,
                          const StationTable& stations, double rate_kw, const Battery& battery);

}  // namespace etaxi
