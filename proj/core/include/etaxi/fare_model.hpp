#pragma once

#include <istream>
#include <set>

#include "etaxi/civil_time.hpp"
#include "etaxi/energy_model.hpp"
#include "etaxi/road_network.hpp"

namespace etaxi {

/// NYC metered tariff. Surcharge windows are half-open clock intervals
/// [start, end) that may wrap midnight.
struct Tariff {
  double initial_charge = 2.50;
  double distance_rate = 0.50;        ///< USD per distance unit
  double distance_unit_miles = 0.2;   ///< 1/5 mile
  double time_rate_per_min = 0.50;    ///< USD per minute in slow traffic or stopped
  double mta_surcharge = 0.50;
  double improvement_surcharge = 0.30;
  double night_surcharge = 0.50;
  int night_start_hour = 20;
  int night_end_hour = 6;
  double peak_surcharge = 1.00;       ///< weekdays only, holidays excluded
  int peak_start_hour = 16;
  int peak_end_hour = 20;
  double slow_speed_kmh = 19.3;       ///< 12 mph

  void validate() const;
};

class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  void add(WallMinute day) { days_.insert(day_index(day)); }
  bool contains(WallMinute m) const { return days_.count(day_index(m)) > 0; }
  std::size_t size() const { return days_.size(); }
  /// CSV with a `date` column (YYYY-MM-DD).
  static HolidayCalendar read_csv(std::istream& in);

 private:
  std::set<std::int64_t> days_;
};

/// Time-of-day surcharges applied at pick-up.
double time_surcharges(const Tariff& t, int minute_of_day, bool peak_eligible);

/// Metered amount: initial charge + distance units + slow-traffic minutes +
/// fixed surcharges (MTA, improvement). Time surcharges not included.
double metered_fare(const Tariff& t, double distance_km, double slow_minutes);

/// Gross fare F^R of driving `path` with pick-up at clock `minute`. A segment
/// whose hourly speed is below the slow threshold is metered by time; idling
/// minutes are always metered by time.
double fare(const Tariff& t, const SpeedNetwork& net, const Path& path, int minute,
            bool peak_eligible);

/// Whether the weekday peak surcharge may apply on the day of `m`.
bool peak_eligible(WallMinute m, const HolidayCalendar& holidays);

enum class Powertrain { Electric, ICE };

struct EnergyPrice {
  double electricity_usd_per_kwh = 0.20;
  double gasoline_usd_per_gallon = 2.50;
  double kwh_per_gallon = 33.7;

  /// U in USD per kWh of traction energy for the given powertrain.
  double per_kwh(Powertrain p) const {
    return p == Powertrain::Electric ? electricity_usd_per_kwh
                                     : gasoline_usd_per_gallon / kwh_per_gallon;
  }
  void validate() const;
};

/// F = F^R - E * U.
inline double net_revenue(double gross_fare, double energy_kwh, double usd_per_kwh) {
  return gross_fare - energy_kwh * usd_per_kwh;
}

/// U^a: tau == 0 pays E(i,j); tau > 0 pays both legs plus the purchased charge.
double action_energy_cost(double tau_min, const ActionLegs& legs, double rate_kw,
                          double usd_per_kwh);

std::string to_string(Powertrain p);
Powertrain parse_powertrain(std::string_view s);

}  // namespace etaxi
