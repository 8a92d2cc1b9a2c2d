#include "etaxi/civil_time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "etaxi/common.hpp"

namespace etaxi {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

std::optional<WallMinute> civil_to_minutes(int y, int mo, int d, int h, int mi) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<WallMinute>(days) * 1440 + h * 60 + mi;
}

}  // namespace

std::optional<WallMinute> parse_date(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  int y = 0, mo = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  return civil_to_minutes(y, mo, d, 0, 0);
}

std::optional<WallMinute> parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() < 16 || (s[10] != ' ' && s[10] != 'T') || s[13] != ':') return std::nullopt;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d) ||
      !read_int(s, 11, 2, h) || !read_int(s, 14, 2, mi)) {
    return std::nullopt;
  }
  if (s.size() > 16) {
    if (s.size() != 19 || s[16] != ':' || !read_int(s, 17, 2, sec) || sec > 60) {
      return std::nullopt;
    }
  }
  return civil_to_minutes(y, mo, d, h, mi);
}

std::string format_timestamp(WallMinute m) {
  using namespace std::chrono;
  const sys_days sd{days{day_index(m)}};
  const year_month_day ymd{sd};
  const int mod = minute_of_day(m);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), mod / 60,
                mod % 60);
  return buf;
}

int weekday(WallMinute m) {
  const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{day_index(m)}}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

DayType day_type(WallMinute m) { return weekday(m) >= 5 ? DayType::Weekend : DayType::Weekday; }

Shift assign_shift(WallMinute m) {
  const int h = hour_of_day(m);
  return (h >= kMorningStartHour && h < kEveningStartHour) ? Shift::Morning : Shift::Evening;
}

WallMinute shift_start(WallMinute m) {
  const WallMinute midnight = day_index(m) * 1440;
  const int h = hour_of_day(m);
  if (h >= kEveningStartHour) return midnight + kEveningStartHour * 60;
  if (h >= kMorningStartHour) return midnight + kMorningStartHour * 60;
  return midnight - 1440 + kEveningStartHour * 60;
}

std::string to_string(DayType d) { return d == DayType::Weekday ? "weekday" : "weekend"; }
std::string to_string(Shift s) { return s == Shift::Morning ? "morning" : "evening"; }

DayType parse_day_type(std::string_view s) {
  if (s == "weekday") return DayType::Weekday;
  if (s == "weekend") return DayType::Weekend;
  throw ConfigError("unknown day type: " + std::string(s));
}

Shift parse_shift(std::string_view s) {
  if (s == "morning") return Shift::Morning;
  if (s == "evening") return Shift::Evening;
  throw ConfigError("unknown shift: " + std::string(s));
}

}  // namespace etaxi
