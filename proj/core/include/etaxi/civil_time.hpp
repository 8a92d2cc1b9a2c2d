#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace etaxi {

/// Wall-clock minutes since 1970-01-01 00:00 in the configured local zone.
/// No DST arithmetic is performed; shifts are defined on wall-clock hours.
using WallMinute = std::int64_t;

enum class DayType { Weekday, Weekend };
enum class Shift { Morning, Evening };

/// Accepts "YYYY-MM-DD HH:MM[:SS]" and "YYYY-MM-DDTHH:MM[:SS]"; seconds are truncated.
std::optional<WallMinute> parse_timestamp(std::string_view text);

/// Accepts "YYYY-MM-DD"; returns the wall minute of midnight.
std::optional<WallMinute> parse_date(std::string_view text);

std::string format_timestamp(WallMinute m);

inline int minute_of_day(WallMinute m) {
  auto r = m % 1440;
  return static_cast<int>(r < 0 ? r + 1440 : r);
}
inline int hour_of_day(WallMinute m) { return minute_of_day(m) / 60; }
inline std::int64_t day_index(WallMinute m) {
  return (m >= 0 ? m : m - 1439) / 1440;
}

/// 0 = Monday ... 6 = Sunday.
int weekday(WallMinute m);

DayType day_type(WallMinute m);

/// Morning iff the clock hour is in [5, 17).
Shift assign_shift(WallMinute m);

/// Wall minute at which the shift containing `m` started.
WallMinute shift_start(WallMinute m);

inline constexpr int kMorningStartHour = 5;
inline constexpr int kEveningStartHour = 17;
inline constexpr int kShiftMinutes = 12 * 60;

std::string to_string(DayType d);
std::string to_string(Shift s);
DayType parse_day_type(std::string_view s);
Shift parse_shift(std::string_view s);

}  // namespace etaxi
