#include "qas/common.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace qas {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::NoPairsFound: return "NoPairsFound";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::BridgeUnreachable: return "BridgeUnreachable";
    case ErrorCode::BridgeProtocolError: return "BridgeProtocolError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::AllPairsSkipped: return "AllPairsSkipped";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::InsufficientWindow: return "InsufficientWindow";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateRegressor: return "DegenerateRegressor";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoUsableCalls: return "NoUsableCalls";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& location) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  if (!location.empty()) {
    out += " (at ";
    out += location;
    out += ")";
  }
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string location)
    : std::runtime_error(compose(code, message, location)),
      code_(code),
      location_(std::move(location)) {}

Date::Date(int year, unsigned month, unsigned day)
    : ymd_{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}} {
  if (!ymd_.ok()) {
    throw Error(ErrorCode::InvalidArgument, "invalid calendar date");
  }
}

Date::Date(std::chrono::sys_days days) : ymd_{days} {}

std::optional<Date> Date::parse(std::string_view iso) {
  // YYYY-MM-DD, optionally followed by a time part ("T..." or " ...") which is ignored.
  if (iso.size() < 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  if (iso.size() > 10 && iso[10] != 'T' && iso[10] != ' ') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto num = [](std::string_view s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  };
  if (!num(iso.substr(0, 4), y) || !num(iso.substr(5, 2), m) || !num(iso.substr(8, 2), d)) {
    return std::nullopt;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{y, m, d};
}

Date Date::parse_or_throw(std::string_view iso, const std::string& location) {
  auto d = parse(iso);
  if (!d) {
    throw Error(ErrorCode::MalformedInput, "invalid ISO-8601 date '" + std::string(iso) + "'",
                location);
  }
  return *d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

namespace {

constexpr std::array<std::string_view, kSectorCount> kSectorNames = {
    "Consumer Discretionary", "Health Care", "Information Technology", "Consumer Staples",
    "Industrials",            "Communication Services", "Financials", "Materials",
    "Energy",                 "Real Estate", "Utilities", "Unknown",
};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '-' || c == '_' || c == '\t') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Sector sector) { return kSectorNames[static_cast<int>(sector)]; }

Sector parse_sector(std::string_view name) {
  const std::string key = squash(name);
  for (int i = 0; i < kSectorCount; ++i) {
    if (squash(kSectorNames[i]) == key) return static_cast<Sector>(i);
  }
  return Sector::Unknown;
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace qas
