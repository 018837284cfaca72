#include <doctest.h>

#include <cmath>
#include <limits>

#include "qas/common.hpp"
#include "qas/csv.hpp"

using namespace qas;

TEST_CASE("dates parse, compare and step across month ends") {
  auto d = Date::parse("2016-02-28");
  REQUIRE(d);
  CHECK(d->plus_days(1).iso() == "2016-02-29");
  CHECK(d->plus_days(2).iso() == "2016-03-01");
  CHECK(Date::parse("2016-01-05T10:00:00")->iso() == "2016-01-05");
  CHECK_FALSE(Date::parse("2016-13-01"));
  CHECK_FALSE(Date::parse("2015-02-29"));
  CHECK_FALSE(Date::parse("20160101"));
  CHECK(Date(2016, 1, 1) < Date(2016, 1, 2));
  // 2024-06-15 is a Saturday
  CHECK(Date(2024, 6, 15).weekday() == 6);
  CHECK(Date(2024, 6, 16).weekday() == 0);
  CHECK_THROWS_AS(Date(2021, 2, 30), Error);
}

TEST_CASE("errors carry code and location") {
  try {
    throw Error(ErrorCode::MalformedInput, "bad row", "line 7");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedInput);
    CHECK(e.location() == "line 7");
    CHECK(std::string(e.what()).find("line 7") != std::string::npos);
  }
}

TEST_CASE("sector names round-trip and accept loose spelling") {
  for (int s = 0; s < kSectorCount; ++s) {
    const auto sector = static_cast<Sector>(s);
    CHECK(parse_sector(to_string(sector)) == sector);
  }
  CHECK(parse_sector("information-technology") == Sector::InformationTechnology);
  CHECK(parse_sector("HEALTH_CARE") == Sector::HealthCare);
  CHECK(parse_sector("widgets") == Sector::Unknown);
}

TEST_CASE("csv fields split, escape and parse strictly") {
  CHECK(csv::split_line("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("x,y") == "\"x,y\"");
  CHECK(csv::escape("q\"") == "\"q\"\"\"");

  for (double v : {0.1, -0.0207, 1.0 / 3.0, 1e-300, 123456789.125}) {
    CHECK(csv::to_double(csv::format_double(v), "t") == v);
  }
  CHECK_THROWS_AS(csv::to_double("1.5x", "t"), Error);
  CHECK_THROWS_AS(csv::to_double("", "t"), Error);
  CHECK(csv::to_count(" 12 ", "t") == 12);
  CHECK_THROWS_AS(csv::to_count("-1", "t"), Error);

  const auto table = csv::parse("Date,High\n\n2020-01-02,10\n2020-01-03,11\n");
  CHECK(table.rows.size() == 2);
  CHECK(table.column("high") == 1);
  CHECK(table.line_numbers[0] == 3);
  CHECK_THROWS_AS(csv::parse("a,b\n1\n"), Error);
}
