#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qas/common.hpp"
#include "qas/switching_index.hpp"

namespace qas {

struct CategorySummary {
  Sector category = Sector::Unknown;
  double mean = 0.0;
  double std_dev = 0.0;  // sample (n - 1); 0 when count == 1
  double minimum = 0.0;
  double maximum = 0.0;
  std::size_t count = 0;
  bool single_sample = false;
};

struct BoxSummary {
  Sector category = Sector::Unknown;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double lower_whisker = 0.0;
  double upper_whisker = 0.0;
  std::vector<double> outliers;  // ascending
};

struct YearlyTrendPoint {
  int year = 0;
  double mean = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

// Linear interpolation between order statistics at position (n - 1) p.
// `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

struct CategoryValue {
  Sector category;
  double value;
};

// One summary per category present, in enum order. Throws EmptyInput.
std::vector<CategorySummary> summarize_categories(const std::vector<CategoryValue>& values);
std::vector<CategorySummary> summarize_categories(const std::vector<CallIndexRecord>& records);

// Whiskers reach the most extreme points inside [q1 - 1.5 IQR, q3 + 1.5 IQR].
// Throws EmptyInput.
BoxSummary box_summary(std::span<const double> values, Sector category);
// Box summaries for each category present, in enum order.
std::vector<BoxSummary> box_summaries(const std::vector<CategoryValue>& values);

// Per calendar year, ascending. Throws EmptyInput.
std::vector<YearlyTrendPoint> yearly_trend(const std::vector<std::pair<Date, double>>& values);

std::string summaries_to_csv(const std::vector<CategorySummary>& rows);
std::string summaries_to_json(const std::vector<CategorySummary>& rows);
std::string boxes_to_csv(const std::vector<BoxSummary>& rows);
std::string boxes_to_json(const std::vector<BoxSummary>& rows);
std::string trend_to_csv(const std::vector<YearlyTrendPoint>& rows);
std::string trend_to_json(const std::vector<YearlyTrendPoint>& rows);

}  // namespace qas
