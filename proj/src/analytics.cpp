#include "qas/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "qas/csv.hpp"

namespace qas {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<CategorySummary> summarize_categories(const std::vector<CategoryValue>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no records to summarize");
  std::vector<std::vector<double>> groups(kSectorCount);
  for (const auto& v : values) groups[static_cast<std::size_t>(v.category)].push_back(v.value);

  std::vector<CategorySummary> out;
  for (int s = 0; s < kSectorCount; ++s) {
    auto& g = groups[static_cast<std::size_t>(s)];
    if (g.empty()) continue;
    // Sorting first makes the sums independent of input order.
    std::sort(g.begin(), g.end());
    CategorySummary cs;
    cs.category = static_cast<Sector>(s);
    cs.count = g.size();
    double sum = 0.0;
    for (double v : g) sum += v;
    cs.mean = sum / static_cast<double>(g.size());
    cs.minimum = g.front();
    cs.maximum = g.back();
    if (g.size() > 1) {
      double ss = 0.0;
      for (double v : g) ss += (v - cs.mean) * (v - cs.mean);
      cs.std_dev = std::sqrt(ss / static_cast<double>(g.size() - 1));
    } else {
      cs.single_sample = true;
    }
    out.push_back(cs);
  }
  return out;
}

std::vector<CategorySummary> summarize_categories(const std::vector<CallIndexRecord>& records) {
  std::vector<CategoryValue> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back({r.sector, r.index});
  return summarize_categories(values);
}

BoxSummary box_summary(std::span<const double> values, Sector category) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values for box summary");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxSummary b;
  b.category = category;
  b.q1 = quantile_sorted(sorted, 0.25);
  b.median = quantile_sorted(sorted, 0.5);
  b.q3 = quantile_sorted(sorted, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.lower_whisker = b.q1;
  b.upper_whisker = b.q3;
  bool have_inside = false;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
      continue;
    }
    if (!have_inside) {
      b.lower_whisker = v;
      have_inside = true;
    }
    b.upper_whisker = v;
  }
  return b;
}

std::vector<BoxSummary> box_summaries(const std::vector<CategoryValue>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values for box summaries");
  std::vector<std::vector<double>> groups(kSectorCount);
  for (const auto& v : values) groups[static_cast<std::size_t>(v.category)].push_back(v.value);
  std::vector<BoxSummary> out;
  for (int s = 0; s < kSectorCount; ++s) {
    const auto& g = groups[static_cast<std::size_t>(s)];
    if (!g.empty()) out.push_back(box_summary(g, static_cast<Sector>(s)));
  }
  return out;
}

std::vector<YearlyTrendPoint> yearly_trend(const std::vector<std::pair<Date, double>>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values for yearly trend");
  std::map<int, std::vector<double>> by_year;
  for (const auto& [date, v] : values) by_year[date.year()].push_back(v);
  std::vector<YearlyTrendPoint> out;
  for (auto& [year, g] : by_year) {
    std::sort(g.begin(), g.end());
    double sum = 0.0;
    for (double v : g) sum += v;
    out.push_back({year, sum / static_cast<double>(g.size()), quantile_sorted(g, 0.5), g.size()});
  }
  return out;
}

std::string summaries_to_csv(const std::vector<CategorySummary>& rows) {
  std::string out = "category,mean,std_dev,count,minimum,maximum\n";
  for (const auto& r : rows) {
    out += csv::escape(to_string(r.category)) + "," + csv::format_double(r.mean) + "," +
           csv::format_double(r.std_dev) + "," + std::to_string(r.count) + "," +
           csv::format_double(r.minimum) + "," + csv::format_double(r.maximum) + "\n";
  }
  return out;
}

std::string summaries_to_json(const std::vector<CategorySummary>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"category", std::string(to_string(r.category))},
                   {"mean", r.mean},
                   {"std_dev", r.std_dev},
                   {"count", r.count},
                   {"minimum", r.minimum},
                   {"maximum", r.maximum},
                   {"single_sample", r.single_sample}});
  }
  return arr.dump(2);
}

std::string boxes_to_csv(const std::vector<BoxSummary>& rows) {
  std::string out = "category,q1,median,q3,lower_whisker,upper_whisker,outliers\n";
  for (const auto& r : rows) {
    std::string outliers;
    for (double v : r.outliers) {
      if (!outliers.empty()) outliers.push_back(';');
      outliers += csv::format_double(v);
    }
    out += csv::escape(to_string(r.category)) + "," + csv::format_double(r.q1) + "," +
           csv::format_double(r.median) + "," + csv::format_double(r.q3) + "," +
           csv::format_double(r.lower_whisker) + "," + csv::format_double(r.upper_whisker) + "," +
           outliers + "\n";
  }
  return out;
}

std::string boxes_to_json(const std::vector<BoxSummary>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"category", std::string(to_string(r.category))},
                   {"q1", r.q1},
                   {"median", r.median},
                   {"q3", r.q3},
                   {"lower_whisker", r.lower_whisker},
                   {"upper_whisker", r.upper_whisker},
                   {"outliers", r.outliers}});
  }
  return arr.dump(2);
}

std::string trend_to_csv(const std::vector<YearlyTrendPoint>& rows) {
  std::string out = "year,mean,median,count\n";
  for (const auto& r : rows) {
    out += std::to_string(r.year) + "," + csv::format_double(r.mean) + "," +
           csv::format_double(r.median) + "," + std::to_string(r.count) + "\n";
  }
  return out;
}

std::string trend_to_json(const std::vector<YearlyTrendPoint>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"year", r.year}, {"mean", r.mean}, {"median", r.median}, {"count", r.count}});
  }
  return arr.dump(2);
}

}  // namespace qas
