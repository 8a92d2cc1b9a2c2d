#include "etaxi/fare_model.hpp"

#include "etaxi/csv.hpp"

namespace etaxi {

namespace {
bool in_window(int hour, int start, int end) {
  return start <= end ? (hour >= start && hour < end) : (hour >= start || hour < end);
}
}  // namespace

void Tariff::validate() const {
  for (double v : {initial_charge, distance_rate, time_rate_per_min, mta_surcharge,
                   improvement_surcharge, night_surcharge, peak_surcharge}) {
    if (!(v >= 0.0)) throw ConfigError("tariff amounts must be non-negative");
  }
  if (!(distance_unit_miles > 0.0) || !(slow_speed_kmh > 0.0)) {
    throw ConfigError("tariff distance unit and slow speed must be positive");
  }
}

void EnergyPrice::validate() const {
  if (!(electricity_usd_per_kwh >= 0.0) || !(gasoline_usd_per_gallon >= 0.0) ||
      !(kwh_per_gallon > 0.0)) {
    throw ConfigError("energy prices must be non-negative");
  }
}

HolidayCalendar HolidayCalendar::read_csv(std::istream& in) {
  HolidayCalendar cal;
  csv::Reader reader(in);
  if (!reader.read_header()) return cal;
  const auto c = reader.column("date");
  if (!c) throw SchemaError("holiday file needs a 'date' column");
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto d = parse_date(f.at(*c));
    if (!d) throw DataError("bad holiday date '" + f.at(*c) + "'");
    cal.add(*d);
  }
  return cal;
}

double time_surcharges(const Tariff& t, int minute_of_day, bool peak_eligible) {
  const int hour = (minute_of_day / 60) % kHoursPerDay;
  double s = 0.0;
  if (in_window(hour, t.night_start_hour, t.night_end_hour)) s += t.night_surcharge;
  if (peak_eligible && in_window(hour, t.peak_start_hour, t.peak_end_hour)) {
    s += t.peak_surcharge;
  }
  return s;
}

double metered_fare(const Tariff& t, double distance_km, double slow_minutes) {
  const double units = distance_km / kKmPerMile / t.distance_unit_miles;
  return t.initial_charge + units * t.distance_rate + slow_minutes * t.time_rate_per_min +
         t.mta_surcharge + t.improvement_surcharge;
}

double fare(const Tariff& t, const SpeedNetwork& net, const Path& path, int minute,
            bool peak_eligible) {
  const int hour = (minute / 60) % kHoursPerDay;
  double fast_km = 0.0;
  double slow_min = 0.0;
  double driving_min = 0.0;
  for (auto e : path.edges) {
    const double km = net.graph().edges()[e].km;
    const double v = net.speed_kmh(e, hour);
    const double minutes = km / v * 60.0;
    driving_min += minutes;
    if (v >= t.slow_speed_kmh) fast_km += km;
    else slow_min += minutes;
  }
  const double lambda = net.idling_ratio(hour);
  slow_min += driving_min * lambda / (1.0 - lambda);
  return metered_fare(t, fast_km, slow_min) + time_surcharges(t, minute, peak_eligible);
}

bool peak_eligible(WallMinute m, const HolidayCalendar& holidays) {
  return day_type(m) == DayType::Weekday && !holidays.contains(m);
}

double action_energy_cost(double tau_min, const ActionLegs& legs, double rate_kw,
                          double usd_per_kwh) {
  if (tau_min <= 0.0) return legs.direct_kwh * usd_per_kwh;
  return (legs.to_station_kwh + legs.from_station_kwh + charge_energy_kwh(tau_min, rate_kw)) *
         usd_per_kwh;
}

std::string to_string(Powertrain p) { return p == Powertrain::Electric ? "electric" : "ice"; }

Powertrain parse_powertrain(std::string_view s) {
  if (s == "electric" || s == "ev") return Powertrain::Electric;
  if (s == "ice" || s == "gasoline") return Powertrain::ICE;
  throw ConfigError("unknown powertrain: " + std::string(s));
}

}  // namespace etaxi
