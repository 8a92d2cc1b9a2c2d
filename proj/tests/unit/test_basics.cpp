#include <gtest/gtest.h>

#include <sstream>

#include "etaxi/civil_time.hpp"
#include "etaxi/csv.hpp"
#include "etaxi/geo.hpp"

using namespace etaxi;

TEST(CivilTime, ParsesBothSeparatorsAndTruncatesSeconds) {
  const auto a = parse_timestamp("2013-01-09 09:25:59");
  const auto b = parse_timestamp("2013-01-09T09:25");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(*a, *b);
  EXPECT_EQ(format_timestamp(*a), "2013-01-09 09:25:00");
  EXPECT_EQ(minute_of_day(*a), 9 * 60 + 25);
}

TEST(CivilTime, RejectsMalformedText) {
  EXPECT_FALSE(parse_timestamp("2013-13-01 00:00"));
  EXPECT_FALSE(parse_timestamp("2013-02-30 00:00"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_FALSE(parse_timestamp("2013-01-01 24:00"));
}

TEST(CivilTime, WeekdayAndDayType) {
  // 2013-01-07 was a Monday.
  EXPECT_EQ(weekday(*parse_date("2013-01-07")), 0);
  EXPECT_EQ(weekday(*parse_date("2013-01-13")), 6);
  EXPECT_EQ(day_type(*parse_timestamp("2013-01-11 23:59")), DayType::Weekday);
  EXPECT_EQ(day_type(*parse_timestamp("2013-01-12 00:00")), DayType::Weekend);
}

TEST(CivilTime, ShiftAssignment) {
  EXPECT_EQ(assign_shift(*parse_timestamp("2013-01-09 06:00")), Shift::Morning);
  EXPECT_EQ(assign_shift(*parse_timestamp("2013-01-09 17:00")), Shift::Evening);
  EXPECT_EQ(assign_shift(*parse_timestamp("2013-01-09 03:00")), Shift::Evening);
  EXPECT_EQ(assign_shift(*parse_timestamp("2013-01-09 05:00")), Shift::Morning);
  EXPECT_EQ(assign_shift(*parse_timestamp("2013-01-09 04:59")), Shift::Evening);
}

TEST(CivilTime, EveningShiftStartsPreviousDayAfterMidnight) {
  EXPECT_EQ(shift_start(*parse_timestamp("2013-01-09 03:00")), *parse_timestamp("2013-01-08 17:00"));
  EXPECT_EQ(shift_start(*parse_timestamp("2013-01-09 18:10")), *parse_timestamp("2013-01-09 17:00"));
  EXPECT_EQ(shift_start(*parse_timestamp("2013-01-09 16:59")), *parse_timestamp("2013-01-09 05:00"));
}

TEST(Csv, SplitsQuotedFields) {
  const auto f = csv::split_line(R"(a,"b,c","d""e",)");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
  EXPECT_EQ(f[3], "");
}

TEST(Csv, ReaderSkipsCommentsAndBlankLines) {
  std::istringstream in("# note\nx,y\n\n1,2\n# more\n3,4\n");
  csv::Reader r(in);
  ASSERT_TRUE(r.read_header());
  EXPECT_EQ(r.column("y"), 1u);
  EXPECT_FALSE(r.column("z"));
  std::vector<std::string> f;
  int rows = 0;
  while (r.next(f)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 8.3, -2.5e-7, 123456789.125}) {
    EXPECT_EQ(*csv::to_double(csv::format_double(v)), v);
  }
  EXPECT_FALSE(csv::to_double("1.0x"));
  EXPECT_FALSE(csv::to_int("3.5"));
  EXPECT_EQ(*csv::to_int("-42"), -42);
}

TEST(Geo, HaversineOfOneDegreeLatitude) {
  const double km = haversine_km({40.0, -74.0}, {41.0, -74.0});
  EXPECT_NEAR(km, kEarthRadiusKm * 3.14159265358979323846 / 180.0, 1e-9);
}

TEST(Geo, OffsetIsConsistentWithHaversine) {
  const LatLon o{40.75, -73.99};
  EXPECT_NEAR(haversine_km(o, offset_km(o, 2.0, 0.0)), 2.0, 1e-6);
  EXPECT_NEAR(haversine_km(o, offset_km(o, 0.0, 3.0)), 3.0, 1e-3);
}
