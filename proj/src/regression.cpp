#include "qas/regression.hpp"

#include <cmath>

#include "qas/csv.hpp"

namespace qas {

RegressionResult ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "x and y differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "need at least 3 points");

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::DegenerateRegressor, "regressor is constant");

  RegressionResult r;
  r.n = n;
  r.coefficient = sxy / sxx;
  r.intercept = my - r.coefficient * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - r.intercept - r.coefficient * x[i];
    r.residual_sum_squares += e * e;
  }
  r.std_error = std::sqrt(r.residual_sum_squares / static_cast<double>(n - 2) / sxx);
  // An exact fit has zero standard error; t is then reported as +-inf (or 0 for a flat line).
  if (r.std_error > 0.0) {
    r.t_value = r.coefficient / r.std_error;
  } else {
    r.t_value = r.coefficient == 0.0 ? 0.0 : std::copysign(INFINITY, r.coefficient);
  }
  return r;
}

SectorRegressions fit_by_sector(const std::vector<LabeledCall>& calls) {
  SectorRegressions out;
  std::vector<std::vector<double>> xs(kSectorCount);
  std::vector<std::vector<double>> ys(kSectorCount);
  std::vector<double> all_x;
  std::vector<double> all_y;
  for (const auto& c : calls) {
    const auto s = static_cast<std::size_t>(c.record.sector);
    xs[s].push_back(c.record.index);
    ys[s].push_back(c.relative_change);
    all_x.push_back(c.record.index);
    all_y.push_back(c.relative_change);
  }
  auto attempt = [&](std::optional<Sector> sector, const std::vector<double>& x,
                     const std::vector<double>& y) {
    try {
      RegressionResult r = ols_fit(x, y);
      r.sector = sector;
      out.results.push_back(r);
    } catch (const Error& e) {
      out.skipped.push_back({sector, std::string(to_string(e.code()))});
    }
  };
  for (int s = 0; s < kSectorCount; ++s) {
    if (xs[static_cast<std::size_t>(s)].empty()) continue;
    attempt(static_cast<Sector>(s), xs[static_cast<std::size_t>(s)], ys[static_cast<std::size_t>(s)]);
  }
  attempt(std::nullopt, all_x, all_y);
  return out;
}

std::string regressions_to_csv(const SectorRegressions& fits) {
  std::string out = "sector,coefficient,std_error,t_value,n\n";
  for (const auto& r : fits.results) {
    out += csv::escape(r.sector ? to_string(*r.sector) : "Overall") + "," +
           csv::format_double(r.coefficient) + "," + csv::format_double(r.std_error) + "," +
           csv::format_double(r.t_value) + "," + std::to_string(r.n) + "\n";
  }
  return out;
}

}  // namespace qas
