#include "qas/market.hpp"

#include <algorithm>
#include <cmath>

#include "qas/csv.hpp"

namespace qas {

PriceSeries load_prices(std::string_view raw, std::string symbol) {
  const csv::Table table = csv::parse(raw);
  const int c_date = table.column("date");
  const int c_high = table.column("high");
  if (c_date < 0 || c_high < 0) {
    throw Error(ErrorCode::MalformedInput, "price CSV needs 'date' and 'high' columns", "line 1");
  }
  PriceSeries series;
  series.company_symbol = std::move(symbol);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]);
    PricePoint p;
    p.date = Date::parse_or_throw(trim(row[static_cast<std::size_t>(c_date)]), where);
    p.high = csv::to_double(row[static_cast<std::size_t>(c_high)], where);
    if (!std::isfinite(p.high) || p.high <= 0.0) {
      throw Error(ErrorCode::NonPositivePrice, "price must be positive and finite", where);
    }
    series.points.push_back(p);
  }
  std::stable_sort(series.points.begin(), series.points.end(),
                   [](const PricePoint& a, const PricePoint& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    if (series.points[i].date == series.points[i - 1].date) {
      throw Error(ErrorCode::DuplicateDate, "duplicate date " + series.points[i].date.iso());
    }
  }
  return series;
}

std::pair<double, double> align_window(const PriceSeries& series, const Date& call_date) {
  const auto& pts = series.points;
  auto after = std::upper_bound(pts.begin(), pts.end(), call_date,
                                [](const Date& d, const PricePoint& p) { return d < p.date; });
  auto before = std::lower_bound(pts.begin(), pts.end(), call_date,
                                 [](const PricePoint& p, const Date& d) { return p.date < d; });
  if (before == pts.begin() || after == pts.end()) {
    throw Error(ErrorCode::InsufficientWindow,
                "no trading day on both sides of " + call_date.iso() + " for " + series.company_symbol);
  }
  return {std::prev(before)->high, after->high};
}

int label(double prev, double next, const LabelSpec& spec) {
  if (spec.kind == LabelKind::Absolute) return next >= prev ? 1 : -1;
  return (next - prev) / prev >= spec.tau ? 1 : -1;
}

int orient(int label, PositiveClass positive) {
  return positive == PositiveClass::Up ? label : -label;
}

LabeledCall label_call(const CallIndexRecord& record, const PriceSeries& series,
                       const LabelSpec& spec) {
  const auto [prev, next] = align_window(series, record.call_date);
  return LabeledCall{record, prev, next, (next - prev) / prev, label(prev, next, spec)};
}

LabelSpec parse_label_spec(std::string_view kind, double tau) {
  const std::string key = to_lower(kind);
  if (!std::isfinite(tau)) throw Error(ErrorCode::InvalidArgument, "tau must be finite");
  if (key == "absolute" || key == "def1") return {LabelKind::Absolute, 0.0};
  if (key == "relative" || key == "def2") return {LabelKind::Relative, tau};
  throw Error(ErrorCode::InvalidArgument, "unknown label kind '" + std::string(kind) + "'");
}

PositiveClass parse_positive_class(std::string_view name) {
  const std::string key = to_lower(name);
  if (key == "up") return PositiveClass::Up;
  if (key == "down") return PositiveClass::Down;
  throw Error(ErrorCode::InvalidArgument, "positive class must be 'up' or 'down'");
}

std::string labeled_to_csv(const std::vector<LabeledCall>& calls) {
  std::string out =
      "symbol,date,sector,index,n_pairs_scored,n_pairs_skipped,prev_price,next_price,"
      "relative_change,label\n";
  for (const auto& c : calls) {
    const auto& r = c.record;
    out += csv::escape(r.company_symbol) + "," + r.call_date.iso() + "," +
           csv::escape(to_string(r.sector)) + "," + csv::format_double(r.index) + "," +
           std::to_string(r.n_pairs_scored) + "," + std::to_string(r.n_pairs_skipped) + "," +
           csv::format_double(c.prev_price) + "," + csv::format_double(c.next_price) + "," +
           csv::format_double(c.relative_change) + "," + std::to_string(c.label) + "\n";
  }
  return out;
}

std::vector<LabeledCall> labeled_from_csv(std::string_view text) {
  const auto records = records_from_csv(text);
  const csv::Table table = csv::parse(text);
  const int c_prev = table.column("prev_price");
  const int c_next = table.column("next_price");
  const int c_change = table.column("relative_change");
  const int c_label = table.column("label");
  if (c_prev < 0 || c_next < 0 || c_change < 0 || c_label < 0) {
    throw Error(ErrorCode::MalformedInput,
                "labeled CSV needs prev_price,next_price,relative_change,label", "line 1");
  }
  std::vector<LabeledCall> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]);
    LabeledCall c;
    c.record = records[i];
    c.prev_price = csv::to_double(row[static_cast<std::size_t>(c_prev)], where);
    c.next_price = csv::to_double(row[static_cast<std::size_t>(c_next)], where);
    c.relative_change = csv::to_double(row[static_cast<std::size_t>(c_change)], where);
    const std::string lab = trim(row[static_cast<std::size_t>(c_label)]);
    if (lab != "1" && lab != "-1") throw Error(ErrorCode::MalformedInput, "label must be 1 or -1", where);
    c.label = lab == "1" ? 1 : -1;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace qas
