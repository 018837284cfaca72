#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "qas/regression.hpp"

using namespace qas;

namespace {

LabeledCall call(Sector sector, double index, double change) {
  LabeledCall c;
  c.record = CallIndexRecord{"S", Date(2020, 1, 1), sector, index, 1, 0};
  c.relative_change = change;
  return c;
}

// Normal-equations solution with the textbook covariance.
struct Oracle {
  double slope;
  double intercept;
  double se;
};

Oracle normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = x[static_cast<std::size_t>(i)];
    Y(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd beta = xtx.ldlt().solve(X.transpose() * Y);
  const double s2 = (Y - X * beta).squaredNorm() / static_cast<double>(n - 2);
  const Eigen::MatrixXd cov = s2 * xtx.inverse();
  return {beta(1), beta(0), std::sqrt(cov(1, 1))};
}

}  // namespace

TEST_CASE("exact line") {
  const std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  const auto r = ols_fit(x, y);
  CHECK(r.coefficient == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.std_error == 0.0);
  CHECK(std::isinf(r.t_value));
  CHECK(r.t_value > 0);
  CHECK(r.n == 5);
}

TEST_CASE("regression errors") {
  const std::vector<double> flat = {1, 1, 1, 1};
  const std::vector<double> y = {1, 2, 3, 4};
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code([&] { ols_fit(flat, y); }) == ErrorCode::DegenerateRegressor);
  CHECK(code([&] { ols_fit(std::vector<double>{1, 2, 3}, y); }) == ErrorCode::LengthMismatch);
  CHECK(code([&] { ols_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }) == ErrorCode::TooFewPoints);
}

TEST_CASE("matches the normal equations on random data") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + t * 3;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 0.5 - 1.5 * x[i] + g(rng);
    }
    const auto r = ols_fit(x, y);
    const auto o = normal_equations(x, y);
    CHECK(std::abs(r.coefficient - o.slope) <= 1e-8);
    CHECK(std::abs(r.intercept - o.intercept) <= 1e-8);
    CHECK(std::abs(r.std_error - o.se) <= 1e-8);
    CHECK(r.t_value == doctest::Approx(r.coefficient / r.std_error).epsilon(1e-14));
  }
}

TEST_CASE("scaling x and y rescales slope and error but not t") {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> g;
  std::vector<double> x(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = g(rng);
    y[i] = 0.3 * x[i] + g(rng);
  }
  const auto base = ols_fit(x, y);
  const double a = 4.0;
  const double b = -0.25;
  std::vector<double> xs(40), ys(40);
  for (int i = 0; i < 40; ++i) {
    xs[i] = a * x[i] + 7.0;
    ys[i] = b * y[i] - 3.0;
  }
  const auto s = ols_fit(xs, ys);
  CHECK(s.coefficient == doctest::Approx(base.coefficient * b / a).epsilon(1e-12));
  CHECK(s.std_error == doctest::Approx(base.std_error * std::abs(b / a)).epsilon(1e-12));
  CHECK(s.t_value == doctest::Approx(-base.t_value).epsilon(1e-12));
}

TEST_CASE("a point on the fitted line changes neither slope nor intercept") {
  std::vector<double> x = {0.1, 0.4, 0.35, 0.8, 0.55};
  std::vector<double> y = {0.01, -0.02, 0.0, -0.03, 0.005};
  const auto r = ols_fit(x, y);
  x.push_back(0.6);
  y.push_back(r.intercept + r.coefficient * 0.6);
  const auto s = ols_fit(x, y);
  CHECK(s.coefficient == doctest::Approx(r.coefficient).epsilon(1e-12));
  CHECK(s.intercept == doctest::Approx(r.intercept).epsilon(1e-12));
  CHECK(s.residual_sum_squares == doctest::Approx(r.residual_sum_squares).epsilon(1e-12));
}

TEST_CASE("recovers a planted slope within three standard errors") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> x(100), y(100);
  for (int i = 0; i < 100; ++i) {
    x[i] = u(rng);
    y[i] = -0.02 * x[i] + noise(rng);
  }
  const auto r = ols_fit(x, y);
  CHECK(std::abs(r.coefficient + 0.02) <= 3 * r.std_error);
}

TEST_CASE("per-sector fits") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.001);

  std::vector<LabeledCall> one;
  for (int i = 0; i < 30; ++i) {
    const double x = u(rng);
    one.push_back(call(Sector::Energy, x, 0.01 - 0.03 * x + noise(rng)));
  }
  const auto single = fit_by_sector(one);
  REQUIRE(single.results.size() == 2);
  CHECK(single.results[0].sector == Sector::Energy);
  CHECK_FALSE(single.results[1].sector.has_value());
  CHECK(single.results[0].coefficient == single.results[1].coefficient);
  CHECK(single.results[0].std_error == single.results[1].std_error);

  std::vector<LabeledCall> twin = one;
  for (const auto& c : one) twin.push_back(call(Sector::Utilities, c.record.index, c.relative_change));
  const auto twins = fit_by_sector(twin);
  REQUIRE(twins.results.size() == 3);
  CHECK(twins.results[0].coefficient == twins.results[1].coefficient);
  CHECK(twins.results[0].std_error == twins.results[1].std_error);
  CHECK(twins.results[2].coefficient == doctest::Approx(twins.results[0].coefficient).epsilon(1e-12));

  std::vector<LabeledCall> planted;
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    planted.push_back(call(Sector::Financials, x, -0.05 * x + noise(rng)));
    planted.push_back(call(Sector::Materials, x, 0.02 * x + noise(rng)));
  }
  planted.push_back(call(Sector::RealEstate, 0.5, 0.0));
  const auto fits = fit_by_sector(planted);
  bool saw_fin = false;
  bool saw_mat = false;
  for (const auto& r : fits.results) {
    if (r.sector == Sector::Financials) {
      saw_fin = true;
      CHECK(std::abs(r.coefficient + 0.05) <= 3 * r.std_error);
    }
    if (r.sector == Sector::Materials) {
      saw_mat = true;
      CHECK(std::abs(r.coefficient - 0.02) <= 3 * r.std_error);
    }
  }
  CHECK(saw_fin);
  CHECK(saw_mat);
  REQUIRE(fits.skipped.size() == 1);
  CHECK(fits.skipped[0].sector == Sector::RealEstate);

  const std::string csv = regressions_to_csv(fits);
  CHECK(csv.rfind("sector,coefficient,std_error,t_value,n\n", 0) == 0);
  CHECK(csv.find("\nOverall,") != std::string::npos);
  CHECK(csv.find(",401\n") != std::string::npos);
}
