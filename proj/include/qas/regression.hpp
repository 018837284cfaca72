#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qas/common.hpp"
#include "qas/market.hpp"

namespace qas {

// Simple OLS of y on x with intercept and homoskedastic standard error.
// `sector` is empty for the pooled Overall row.
struct RegressionResult {
  std::optional<Sector> sector;
  double coefficient = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  std::size_t n = 0;
  double residual_sum_squares = 0.0;
};

// Throws LengthMismatch, TooFewPoints (n < 3) or DegenerateRegressor.
RegressionResult ols_fit(std::span<const double> x, std::span<const double> y);

struct SkippedSector {
  std::optional<Sector> sector;  // empty for Overall
  std::string reason;
};

struct SectorRegressions {
  std::vector<RegressionResult> results;  // sectors in enum order, then Overall
  std::vector<SkippedSector> skipped;
};

// Regresses relative_change on the index per sector and pooled.
SectorRegressions fit_by_sector(const std::vector<LabeledCall>& calls);

// sector,coefficient,std_error,t_value,n
std::string regressions_to_csv(const SectorRegressions& fits);

}  // namespace qas
