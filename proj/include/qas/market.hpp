#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qas/common.hpp"
#include "qas/switching_index.hpp"

namespace qas {

struct PricePoint {
  Date date;
  double high = 0.0;

  friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

// Daily high prices, strictly increasing dates, positive finite values.
struct PriceSeries {
  std::string company_symbol;
  std::vector<PricePoint> points;
};

enum class LabelKind { Absolute, Relative };

struct LabelSpec {
  LabelKind kind = LabelKind::Absolute;
  double tau = 0.0;  // threshold on relative change; unused for Absolute
};

// Which side of the threshold counts as the positive class in reports.
enum class PositiveClass { Up, Down };

struct LabeledCall {
  CallIndexRecord record;
  double prev_price = 0.0;
  double next_price = 0.0;
  double relative_change = 0.0;
  int label = 1;
};

// CSV with `date` and `high` columns (case-insensitive, extra columns ignored).
// Rows are sorted by date. Throws MalformedInput, NonPositivePrice, DuplicateDate.
PriceSeries load_prices(std::string_view raw, std::string symbol = {});

// Prices at the last point strictly before and the first point strictly after
// call_date. Throws InsufficientWindow.
std::pair<double, double> align_window(const PriceSeries& series, const Date& call_date);

// +1 iff next >= prev (Absolute) or (next - prev) / prev >= tau (Relative).
int label(double prev, double next, const LabelSpec& spec);

// Flips the label when the positive class is a drop.
int orient(int label, PositiveClass positive);

LabeledCall label_call(const CallIndexRecord& record, const PriceSeries& series,
                       const LabelSpec& spec);

LabelSpec parse_label_spec(std::string_view kind, double tau);
PositiveClass parse_positive_class(std::string_view name);

// Index record columns followed by prev_price,next_price,relative_change,label.
std::string labeled_to_csv(const std::vector<LabeledCall>& calls);
std::vector<LabeledCall> labeled_from_csv(std::string_view text);

}  // namespace qas
