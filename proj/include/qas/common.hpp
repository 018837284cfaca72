#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qas {

enum class ErrorCode {
  MalformedInput,
  NoPairsFound,
  ShapeMismatch,
  EmptyText,
  BridgeUnreachable,
  BridgeProtocolError,
  DimensionMismatch,
  ZeroNorm,
  AllPairsSkipped,
  NonPositivePrice,
  DuplicateDate,
  InsufficientWindow,
  DivergenceDetected,
  EmptyDataset,
  DegenerateRegressor,
  LengthMismatch,
  TooFewPoints,
  EmptyInput,
  NoUsableCalls,
  EmptySplit,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. `location` is a line number
// or byte offset for input errors, empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string location = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::string location_;
};

// Calendar date backed by std::chrono; ISO-8601 (YYYY-MM-DD) text form.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);
  explicit Date(std::chrono::sys_days days);

  static std::optional<Date> parse(std::string_view iso);
  static Date parse_or_throw(std::string_view iso, const std::string& location = {});

  int year() const { return static_cast<int>(ymd_.year()); }
  unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
  unsigned day() const { return static_cast<unsigned>(ymd_.day()); }
  std::chrono::sys_days days() const { return std::chrono::sys_days{ymd_}; }
  Date plus_days(int n) const { return Date{days() + std::chrono::days{n}}; }
  // 0 = Sunday .. 6 = Saturday
  unsigned weekday() const { return std::chrono::weekday{days()}.c_encoding(); }

  std::string iso() const;

  friend bool operator==(const Date& a, const Date& b) { return a.ymd_ == b.ymd_; }
  friend auto operator<=>(const Date& a, const Date& b) { return a.ymd_ <=> b.ymd_; }

 private:
  std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1},
                                   std::chrono::day{1}};
};

// The 11 GICS sectors plus Unknown.
enum class Sector {
  ConsumerDiscretionary,
  HealthCare,
  InformationTechnology,
  ConsumerStaples,
  Industrials,
  CommunicationServices,
  Financials,
  Materials,
  Energy,
  RealEstate,
  Utilities,
  Unknown,
};

inline constexpr int kSectorCount = 12;

std::string_view to_string(Sector sector);
// Case-insensitive; ignores spaces, '-' and '_'. Unrecognized names map to Unknown.
Sector parse_sector(std::string_view name);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace qas
