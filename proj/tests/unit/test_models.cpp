#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qas/common.hpp"
#include "qas/models.hpp"

using namespace qas;

namespace {

Dataset make_dataset(std::initializer_list<std::initializer_list<double>> rows, std::vector<int> labels) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) x(r, c++) = v;
    ++r;
  }
  return Dataset{x, std::move(labels)};
}

Dataset random_dataset(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> g;
  Dataset d{Matrix(n, p), std::vector<int>(static_cast<std::size_t>(n))};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < p; ++c) d.features(r, c) = g(rng);
    d.labels[static_cast<std::size_t>(r)] = g(rng) > 0 ? 1 : -1;
  }
  return d;
}

// Two Gaussian blobs centred at +/- 3 on every axis.
Dataset blobs(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> g(0.0, 0.5);
  Dataset d{Matrix(n, p), std::vector<int>(static_cast<std::size_t>(n))};
  for (int r = 0; r < n; ++r) {
    const int y = r % 2 == 0 ? 1 : -1;
    for (int c = 0; c < p; ++c) d.features(r, c) = 3.0 * y + g(rng);
    d.labels[static_cast<std::size_t>(r)] = y;
  }
  return d;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

LinearModel linear_from(const Vector& params, bool fit_intercept = true) {
  LinearModel m;
  m.weights = params.head(params.size() - 1);
  m.bias = params(params.size() - 1);
  m.fit_intercept = fit_intercept;
  return m;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

// Central differences of `f` around `params`.
template <typename F>
Vector numeric_gradient(F f, const Vector& params, double h = 1e-6) {
  Vector g(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Vector up = params;
    Vector down = params;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

double max_rel_error(const Vector& a, const Vector& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, rel_error(a(i), b(i)));
  return worst;
}

// Independent full-batch gradient descent on mean log-loss + (l2/2)|theta|^2.
Vector gd_logistic(const Dataset& d, double l2, double lr, int steps) {
  const Eigen::Index p = d.cols();
  Vector theta = Vector::Zero(p + 1);
  for (int s = 0; s < steps; ++s) {
    Vector g = Vector::Zero(p + 1);
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      const double y = d.labels[static_cast<std::size_t>(r)];
      const double m = y * (d.features.row(r).dot(theta.head(p)) + theta(p));
      const double coef = -y / (1.0 + std::exp(m));
      g.head(p) += coef * d.features.row(r).transpose();
      g(p) += coef;
    }
    g /= static_cast<double>(d.rows());
    g += l2 * theta;
    theta -= lr * g;
  }
  return theta;
}

double sweep_best_threshold(const Vector& x, const std::vector<int>& y) {
  std::vector<double> cuts(x.data(), x.data() + x.size());
  cuts.push_back(-1e300);
  cuts.push_back(1e300);
  double best = 0.0;
  for (double t : cuts) {
    for (int dir : {1, -1}) {
      int correct = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const int pred = (x(i) >= t) ? dir : -dir;
        correct += pred == y[static_cast<std::size_t>(i)];
      }
      best = std::max(best, static_cast<double>(correct) / static_cast<double>(x.size()));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("objective hand cases") {
  const auto one = make_dataset({{1.0, 1.0}}, {-1});
  TrainConfig cfg;
  cfg.l1 = 0.0;
  cfg.l2 = 0.0;

  LinearModel zero{Vector::Zero(2), 0.0, true};
  CHECK(svm_objective(zero, one, cfg).value == 1.0);
  CHECK(logistic_objective(zero, one, cfg).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const auto fit = make_dataset({{1.0}}, {1});
  LinearModel w2{Vector::Constant(1, 2.0), 0.0, false};
  CHECK(svm_objective(w2, fit, cfg).value == 0.0);

  // w = [1, -2], x = [1, 1], y = -1: margin 1, hinge 0, regularizer 0.25 * 5 + 0.1 * 3
  LinearModel w{Vector(2), 0.0, false};
  w.weights << 1.0, -2.0;
  TrainConfig reg;
  reg.l2 = 0.5;
  reg.l1 = 0.1;
  CHECK(svm_objective(w, one, reg).value == doctest::Approx(1.55).epsilon(1e-15));

  // extreme margins stay finite
  const auto far = make_dataset({{50.0}, {-50.0}}, {1, 1});
  LinearModel unit{Vector::Constant(1, 1.0), 0.0, false};
  const auto lv = logistic_objective(unit, far, cfg);
  CHECK(std::isfinite(lv.value));
  CHECK(lv.value == doctest::Approx((std::log1p(std::exp(-50.0)) + 50.0 + std::log1p(std::exp(-50.0))) / 2));
  CHECK(lv.gradient.allFinite());

  // an all-zero network gives equal logits: N log 2
  auto net = MlpModel::seeded(2, {3}, Activation::ReLU, 1);
  net.assign(Vector::Zero(net.parameter_count()));
  const auto three = make_dataset({{1, 2}, {3, 4}, {5, 6}}, {1, -1, 1});
  CHECK(mlp_objective(net, three, cfg).value == doctest::Approx(3 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("objectives are at least their regularizer") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const auto d = random_dataset(rng, 12, 3);
    TrainConfig cfg;
    cfg.l1 = 0.3;
    cfg.l2 = 0.7;
    const Vector p = random_vector(rng, 4);
    const double l2sq = 0.5 * cfg.l2 * p.squaredNorm();
    CHECK(svm_objective(linear_from(p), d, cfg).value >= l2sq + cfg.l1 * p.lpNorm<1>());
    CHECK(logistic_objective(linear_from(p), d, cfg).value >= l2sq);
    auto net = MlpModel::seeded(3, {4}, Activation::Tanh, static_cast<std::uint64_t>(t));
    const Vector q = net.flatten();
    CHECK(mlp_objective(net, d, cfg).value >= cfg.l1 * q.lpNorm<1>() + 0.5 * cfg.l2 * q.squaredNorm());
  }
}

TEST_CASE("svm gradient matches finite differences off the hinge kink") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int t = 0; checked < 25 && t < 200; ++t) {
    const auto d = random_dataset(rng, 15, 3);
    TrainConfig cfg;
    cfg.l1 = 0.05;
    cfg.l2 = 0.2;
    const Vector p = random_vector(rng, 4);
    bool near_kink = (p.array().abs() < 1e-3).any();
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      const double m = d.labels[static_cast<std::size_t>(r)] * (d.features.row(r).dot(p.head(3)) + p(3));
      near_kink = near_kink || std::abs(1.0 - m) < 1e-3;
    }
    if (near_kink) continue;
    ++checked;
    const auto analytic = svm_objective(linear_from(p), d, cfg).gradient;
    const auto numeric = numeric_gradient([&](const Vector& q) { return svm_objective(linear_from(q), d, cfg).value; }, p);
    CHECK(max_rel_error(analytic, numeric) <= 1e-4);
  }
  CHECK(checked == 25);
}

TEST_CASE("logistic gradient matches finite differences") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 25; ++t) {
    const auto d = random_dataset(rng, 20, 4);
    TrainConfig cfg;
    cfg.l2 = 0.1 * t;
    const Vector p = random_vector(rng, 5, 2.0);
    const auto analytic = logistic_objective(linear_from(p), d, cfg).gradient;
    const auto numeric =
        numeric_gradient([&](const Vector& q) { return logistic_objective(linear_from(q), d, cfg).value; }, p);
    CHECK(max_rel_error(analytic, numeric) <= 1e-4);
  }

  // without an intercept the bias slot is inert
  const auto d = random_dataset(rng, 10, 2);
  LinearModel m{random_vector(rng, 2), 0.0, false};
  CHECK(logistic_objective(m, d, TrainConfig{}).gradient(2) == 0.0);
}

TEST_CASE("mlp gradient matches finite differences") {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 24; ++t) {
    const Activation act = t % 2 == 0 ? Activation::Tanh : Activation::ReLU;
    const auto d = random_dataset(rng, 10, 3);
    TrainConfig cfg;
    cfg.l1 = 0.01;
    cfg.l2 = 0.05;
    const std::vector<int> hidden = t % 3 == 0 ? std::vector<int>{4} : std::vector<int>{4, 3};
    auto net = MlpModel::seeded(3, hidden, act, static_cast<std::uint64_t>(100 + t));
    Vector p = random_vector(rng, net.parameter_count());
    net.assign(p);
    const auto analytic = mlp_objective(net, d, cfg).gradient;
    auto probe = net;
    const auto numeric = numeric_gradient(
        [&](const Vector& q) {
          probe.assign(q);
          return mlp_objective(probe, d, cfg).value;
        },
        p);
    CAPTURE(t);
    CHECK(max_rel_error(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("full-batch sgd follows an independent gradient descent") {
  std::mt19937_64 rng(53);
  auto d = random_dataset(rng, 50, 3);
  for (int r = 0; r < 50; ++r) d.labels[static_cast<std::size_t>(r)] = d.features(r, 0) - 0.5 * d.features(r, 2) > 0.2 ? 1 : -1;
  TrainConfig cfg;
  cfg.l2 = 0.1;
  cfg.learning_rate = 0.5;
  cfg.epochs = 300;
  cfg.batch_size = 50;
  const auto result = sgd_train(ModelKind::Logistic, d, cfg);
  const Vector oracle = gd_logistic(d, cfg.l2, cfg.learning_rate, cfg.epochs);
  CHECK((result.linear.weights - oracle.head(3)).cwiseAbs().maxCoeff() <= 1e-3);
  CHECK(std::abs(result.linear.bias - oracle(3)) <= 1e-3);
  REQUIRE(result.objective_trace.size() == 301);
  CHECK(result.objective_trace.back() < result.objective_trace.front());
}

TEST_CASE("separable blobs are fit perfectly by every model") {
  std::mt19937_64 rng(59);
  const auto d = blobs(rng, 60, 2);
  TrainConfig cfg;
  cfg.epochs = 50;
  for (ModelKind k : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Mlp}) {
    CAPTURE(to_string(k));
    const auto c = train_classifier(k, d, cfg);
    CHECK(evaluate_accuracy(c, d) == 1.0);
  }
}

TEST_CASE("a vanishing learning rate leaves parameters at their start") {
  std::mt19937_64 rng(61);
  const auto d = random_dataset(rng, 30, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-300;
  cfg.epochs = 5;
  const auto lin = sgd_train(ModelKind::Svm, d, cfg);
  CHECK(lin.linear.weights.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(lin.linear.bias) <= 1e-12);

  const Vector start = random_vector(rng, MlpModel::seeded(3, cfg.hidden_layers, cfg.activation, 0).parameter_count());
  const auto net = sgd_train(ModelKind::Mlp, d, cfg, start);
  CHECK((net.mlp.flatten() - start).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("training is deterministic for a seed and the seed matters") {
  std::mt19937_64 rng(67);
  const auto d = random_dataset(rng, 40, 3);
  TrainConfig cfg;
  cfg.epochs = 20;
  for (ModelKind k : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Mlp}) {
    const auto a = sgd_train(k, d, cfg);
    const auto b = sgd_train(k, d, cfg);
    CHECK(a.objective_trace == b.objective_trace);
    CHECK(a.linear.weights == b.linear.weights);
    CHECK(a.mlp.flatten() == b.mlp.flatten());
  }
  TrainConfig other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(sgd_train(ModelKind::Mlp, d, cfg).mlp.flatten() != sgd_train(ModelKind::Mlp, d, other).mlp.flatten());
}

TEST_CASE("runaway steps are reported as divergence") {
  std::mt19937_64 rng(71);
  const auto d = random_dataset(rng, 20, 2);
  TrainConfig cfg;
  cfg.l2 = 10.0;
  cfg.learning_rate = 100.0;
  cfg.batch_size = 20;
  cfg.epochs = 500;
  try {
    sgd_train(ModelKind::Svm, d, cfg);
    FAIL("expected DivergenceDetected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergenceDetected);
  }
}

TEST_CASE("invalid configurations and datasets are rejected") {
  std::mt19937_64 rng(73);
  const auto d = random_dataset(rng, 5, 2);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(sgd_train(ModelKind::Svm, d, bad), Error);
  bad = TrainConfig{};
  bad.l2 = -1;
  CHECK_THROWS_AS(sgd_train(ModelKind::Svm, d, bad), Error);
  bad = TrainConfig{};
  bad.hidden_layers = {0};
  CHECK_THROWS_AS(sgd_train(ModelKind::Mlp, d, bad), Error);

  Dataset wrong = d;
  wrong.labels[0] = 0;
  CHECK_THROWS_AS(sgd_train(ModelKind::Svm, wrong, TrainConfig{}), Error);
  try {
    sgd_train(ModelKind::Svm, Dataset{Matrix(0, 2), {}}, TrainConfig{});
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
  CHECK(parse_model_kind("LR") == ModelKind::Logistic);
  CHECK(parse_model_kind("mlp") == ModelKind::Mlp);
  CHECK_THROWS_AS(parse_model_kind("forest"), Error);
}

TEST_CASE("prediction rules") {
  LinearModel zero{Vector::Zero(2), 0.0, true};
  CHECK(predict(zero, Vector::Zero(2)) == 1);
  LinearModel neg{Vector::Constant(2, 1.0), -3.0, true};
  CHECK(predict(neg, Vector::Constant(2, 1.0)) == -1);
  neg.fit_intercept = false;
  CHECK(predict(neg, Vector::Constant(2, 1.0)) == 1);
  CHECK_THROWS_AS(predict(zero, Vector::Zero(3)), Error);

  auto net = MlpModel::seeded(2, {2}, Activation::ReLU, 3);
  net.assign(Vector::Zero(net.parameter_count()));
  CHECK(predict(net, Vector::Constant(2, 1.0)) == 1);

  // hand network: h = relu(x), logits = [h0, h1]
  net.weights[0] = Matrix::Identity(2, 2);
  net.weights[1] = Matrix::Identity(2, 2);
  Vector x(2);
  x << 2.0, 1.0;
  CHECK(predict(net, x) == -1);
  x << -5.0, -1.0;  // both hidden units clip to zero
  CHECK(predict(net, x) == 1);
  x << 0.5, 3.0;
  const Vector z = net.logits(x);
  CHECK(z(0) == 0.5);
  CHECK(z(1) == 3.0);
  CHECK(predict(net, x) == 1);
}

TEST_CASE("accuracy counts correct predictions") {
  LinearModel m{Vector::Constant(1, 1.0), 0.0, false};
  const auto all = make_dataset({{1}, {2}, {-1}, {-2}}, {1, 1, -1, -1});
  CHECK(evaluate_accuracy(m, all) == 1.0);
  const auto half = make_dataset({{1}, {2}, {-1}, {-2}}, {1, -1, 1, -1});
  CHECK(evaluate_accuracy(m, half) == 0.5);

  std::mt19937_64 rng(79);
  const auto d = random_dataset(rng, 37, 1);
  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    const int y = d.labels[static_cast<std::size_t>(r)];
    const int p = d.features(r, 0) >= 0 ? 1 : -1;
    tp += p == 1 && y == 1;
    tn += p == -1 && y == -1;
    fp += p == 1 && y == -1;
    fn += p == -1 && y == 1;
  }
  CHECK(tp + tn + fp + fn == 37);
  CHECK(evaluate_accuracy(m, d) == doctest::Approx(static_cast<double>(tp + tn) / 37).epsilon(1e-15));
  CHECK_THROWS_AS(evaluate_accuracy(m, Dataset{Matrix(0, 1), {}}), Error);
}

TEST_CASE("stronger l2 shrinks the weights") {
  std::mt19937_64 rng(83);
  auto d = random_dataset(rng, 80, 3);
  for (int r = 0; r < 80; ++r) d.labels[static_cast<std::size_t>(r)] = d.features(r, 1) > 0 ? 1 : -1;
  double last = 1e300;
  for (double l2 : {0.001, 0.01, 0.1, 1.0}) {
    TrainConfig cfg;
    cfg.l2 = l2;
    cfg.learning_rate = 0.2;
    cfg.batch_size = 80;
    cfg.epochs = 1500;
    const auto r = sgd_train(ModelKind::Logistic, d, cfg);
    const double norm = std::hypot(r.linear.weights.norm(), r.linear.bias);
    CAPTURE(l2);
    CHECK(norm < last);
    last = norm;
  }
}

TEST_CASE("single-feature models approach the best threshold rule") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.08);
  for (int trial = 0; trial < 3; ++trial) {
    Dataset d{Matrix(200, 1), std::vector<int>(200)};
    const double cut = 0.3 + 0.2 * trial;
    for (int r = 0; r < 200; ++r) {
      d.features(r, 0) = u(rng);
      d.labels[static_cast<std::size_t>(r)] = d.features(r, 0) + noise(rng) < cut ? 1 : -1;
    }
    const double best = sweep_best_threshold(d.features.col(0), d.labels);
    TrainConfig cfg;
    cfg.epochs = 150;
    for (ModelKind k : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Mlp}) {
      CAPTURE(to_string(k));
      CAPTURE(trial);
      const auto c = train_classifier(k, d, cfg);
      CHECK(evaluate_accuracy(c, d) >= best - 0.02);
    }
  }
}

TEST_CASE("standardizer is fitted on training rows only") {
  const auto train = make_dataset({{1, 10}, {3, 10}, {5, 10}}, {1, -1, 1});
  const auto s = Standardizer::fit(train.features);
  CHECK(s.mean(0) == 3.0);
  CHECK(s.scale(0) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-15));
  CHECK(s.scale(1) == 1.0);  // constant column
  const Matrix z = s.apply(train.features);
  CHECK(std::abs(z.col(0).mean()) <= 1e-15);

  const auto c = train_classifier(ModelKind::Logistic, train, TrainConfig{});
  CHECK(c.standardizer.mean == s.mean);
  CHECK(c.standardizer.scale == s.scale);
  CHECK_THROWS_AS(s.apply(Vector(Vector::Zero(3))), Error);
}

TEST_CASE("saved models reload with identical predictions") {
  std::mt19937_64 rng(97);
  const auto d = blobs(rng, 40, 3);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.hidden_layers = {5, 3};
  cfg.activation = Activation::Tanh;
  for (ModelKind k : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Mlp}) {
    CAPTURE(to_string(k));
    const auto c = train_classifier(k, d, cfg);
    const std::string json = save_model(c);
    const auto back = load_model(json);
    CHECK(save_model(back) == json);
    const auto probe = random_dataset(rng, 50, 3);
    for (Eigen::Index r = 0; r < probe.rows(); ++r) {
      const Vector x = probe.features.row(r).transpose();
      CHECK(back.predict(x) == c.predict(x));
    }
  }
  CHECK_THROWS_AS(load_model("{\"kind\": \"svm\"}"), Error);
  CHECK_THROWS_AS(load_model("not json"), Error);
}
