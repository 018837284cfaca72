#include "qas/models.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <span>

#include <json.hpp>

#include "qas/common.hpp"

namespace qas {

void Dataset::validate() const {
  if (features.rows() < 1) throw Error(ErrorCode::EmptyDataset, "dataset has no rows");
  if (features.cols() < 1) throw Error(ErrorCode::InvalidArgument, "dataset has no features");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "label count differs from row count");
  }
  if (!features.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite feature");
  for (int y : labels) {
    if (y != 1 && y != -1) throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
  }
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Svm: return "svm";
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Mlp: return "nn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  const std::string key = to_lower(name);
  if (key == "svm") return ModelKind::Svm;
  if (key == "logistic" || key == "lr") return ModelKind::Logistic;
  if (key == "nn" || key == "mlp") return ModelKind::Mlp;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "regularization must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  for (int h : hidden_layers) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden layer sizes must be >= 1");
  }
}

namespace {

using Rows = std::span<const Eigen::Index>;

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// log(1 + exp(-m)) without overflow.
double log_loss(double m) { return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

// 1 / (1 + exp(m)).
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

// An objective of the form mean_loss(rows) + reg_scale * regularizer(params).
class Objective {
 public:
  virtual ~Objective() = default;
  virtual Eigen::Index parameter_count() const = 0;
  virtual double evaluate(const Vector& params, const Dataset& data, Rows rows, double reg_scale,
                          Vector* grad) const = 0;
  // Regularizer weight that makes evaluate() a per-example rescaling of the
  // model's full objective.
  virtual double reg_scale(Eigen::Index n) const = 0;
  // Converts the per-example form back to the full objective.
  virtual double full_from_scaled(double scaled, Eigen::Index n) const = 0;
};

class LinearObjective final : public Objective {
 public:
  LinearObjective(ModelKind kind, Eigen::Index features, const TrainConfig& cfg)
      : kind_(kind), features_(features), cfg_(cfg) {}

  Eigen::Index parameter_count() const override { return features_ + 1; }

  double evaluate(const Vector& params, const Dataset& data, Rows rows, double reg_scale,
                  Vector* grad) const override {
    const auto w = params.head(features_);
    const double b = cfg_.fit_intercept ? params(features_) : 0.0;
    if (grad) grad->setZero(parameter_count());
    double loss = 0.0;
    for (Eigen::Index r : rows) {
      const double y = data.labels[static_cast<std::size_t>(r)];
      const double margin = y * (data.features.row(r).dot(w) + b);
      double dmargin = 0.0;
      if (kind_ == ModelKind::Svm) {
        const double slack = 1.0 - margin;
        loss += std::max(0.0, slack);
        dmargin = slack > 0.0 ? -1.0 : 0.0;
      } else {
        loss += log_loss(margin);
        dmargin = -sigmoid_neg(margin);
      }
      if (grad && dmargin != 0.0) {
        grad->head(features_) += dmargin * y * data.features.row(r).transpose();
        if (cfg_.fit_intercept) (*grad)(features_) += dmargin * y;
      }
    }
    const double n = static_cast<double>(rows.size());
    loss /= n;
    if (grad) *grad /= n;

    // The bias is regularized as the weight of the constant feature.
    const Eigen::Index m = cfg_.fit_intercept ? features_ + 1 : features_;
    const auto theta = params.head(m);
    double reg = 0.5 * cfg_.l2 * theta.squaredNorm();
    if (grad) grad->head(m) += reg_scale * cfg_.l2 * theta;
    if (kind_ == ModelKind::Svm && cfg_.l1 > 0.0) {
      reg += cfg_.l1 * theta.lpNorm<1>();
      if (grad) {
        for (Eigen::Index i = 0; i < m; ++i) (*grad)(i) += reg_scale * cfg_.l1 * sign0(theta(i));
      }
    }
    return loss + reg_scale * reg;
  }

  double reg_scale(Eigen::Index) const override { return 1.0; }
  double full_from_scaled(double scaled, Eigen::Index) const override { return scaled; }

 private:
  ModelKind kind_;
  Eigen::Index features_;
  TrainConfig cfg_;
};

class MlpObjective final : public Objective {
 public:
  MlpObjective(MlpModel shape, const TrainConfig& cfg) : shape_(std::move(shape)), cfg_(cfg) {}

  Eigen::Index parameter_count() const override { return shape_.parameter_count(); }

  double evaluate(const Vector& params, const Dataset& data, Rows rows, double reg_scale,
                  Vector* grad) const override {
    MlpModel model = shape_;
    model.assign(params);
    const std::size_t layers = model.weights.size();
    std::vector<Matrix> gw;
    std::vector<Vector> gb;
    if (grad) {
      for (std::size_t l = 0; l < layers; ++l) {
        gw.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
        gb.push_back(Vector::Zero(model.biases[l].size()));
      }
    }

    double loss = 0.0;
    std::vector<Vector> acts(layers + 1);
    std::vector<Vector> pre(layers);
    for (Eigen::Index r : rows) {
      acts[0] = data.features.row(r).transpose();
      for (std::size_t l = 0; l < layers; ++l) {
        pre[l] = model.weights[l] * acts[l] + model.biases[l];
        acts[l + 1] = (l + 1 < layers) ? activate(pre[l], model.activation) : pre[l];
      }
      const Vector& z = acts[layers];
      const double peak = z.maxCoeff();
      const double lse = peak + std::log((z.array() - peak).exp().sum());
      const int cls = data.labels[static_cast<std::size_t>(r)] > 0 ? 1 : 0;
      loss += lse - z(cls);
      if (!grad) continue;

      Vector delta = (z.array() - lse).exp().matrix();
      delta(cls) -= 1.0;
      for (std::size_t l = layers; l-- > 0;) {
        gw[l] += delta * acts[l].transpose();
        gb[l] += delta;
        if (l == 0) break;
        Vector back = model.weights[l].transpose() * delta;
        delta = back.cwiseProduct(activation_slope(pre[l - 1], acts[l], model.activation));
      }
    }
    const double n = static_cast<double>(rows.size());
    loss /= n;

    const double reg = cfg_.l1 * params.lpNorm<1>() + 0.5 * cfg_.l2 * params.squaredNorm();
    if (grad) {
      grad->resize(parameter_count());
      Eigen::Index offset = 0;
      for (std::size_t l = 0; l < layers; ++l) {
        grad->segment(offset, gw[l].size()) = Eigen::Map<const Vector>(gw[l].data(), gw[l].size()) / n;
        offset += gw[l].size();
        grad->segment(offset, gb[l].size()) = gb[l] / n;
        offset += gb[l].size();
      }
      for (Eigen::Index i = 0; i < params.size(); ++i) {
        (*grad)(i) += reg_scale * (cfg_.l1 * sign0(params(i)) + cfg_.l2 * params(i));
      }
    }
    return loss + reg_scale * reg;
  }

  double reg_scale(Eigen::Index n) const override { return 1.0 / static_cast<double>(n); }
  double full_from_scaled(double scaled, Eigen::Index n) const override {
    return scaled * static_cast<double>(n);
  }

  static Vector activate(const Vector& z, Activation a) {
    return a == Activation::ReLU ? z.cwiseMax(0.0) : Vector(z.array().tanh());
  }

  static Vector activation_slope(const Vector& z, const Vector& out, Activation a) {
    if (a == Activation::ReLU) return (z.array() > 0.0).cast<double>().matrix();
    return (1.0 - out.array().square()).matrix();
  }

 private:
  MlpModel shape_;
  TrainConfig cfg_;
};

std::vector<Eigen::Index> all_rows(Eigen::Index n) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return rows;
}

double full_objective(const Objective& obj, const Vector& params, const Dataset& data, Vector* grad) {
  const auto rows = all_rows(data.rows());
  const Eigen::Index n = data.rows();
  const double scaled = obj.evaluate(params, data, rows, obj.reg_scale(n), grad);
  if (grad) *grad *= obj.full_from_scaled(1.0, n);
  return obj.full_from_scaled(scaled, n);
}

Vector linear_params(const LinearModel& model) {
  Vector p(model.weights.size() + 1);
  p.head(model.weights.size()) = model.weights;
  p(model.weights.size()) = model.fit_intercept ? model.bias : 0.0;
  return p;
}

TrainConfig with_intercept(TrainConfig cfg, bool fit_intercept) {
  cfg.fit_intercept = fit_intercept;
  return cfg;
}

void check_shapes(Eigen::Index expected, const Dataset& data) {
  if (data.cols() != expected) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(expected) +
                                              " features, dataset has " + std::to_string(data.cols()));
  }
}

// Seeded Fisher-Yates with a portable bounded draw.
void shuffle(std::vector<Eigen::Index>& rows, std::mt19937_64& rng) {
  for (std::size_t i = rows.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(rows[i - 1], rows[static_cast<std::size_t>(draw % bound)]);
  }
}

}  // namespace

MlpModel MlpModel::seeded(int inputs, const std::vector<int>& hidden, Activation activation,
                          std::uint64_t seed) {
  MlpModel m;
  m.activation = activation;
  m.layer_sizes.push_back(inputs);
  for (int h : hidden) m.layer_sizes.push_back(h);
  m.layer_sizes.push_back(2);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int in = m.layer_sizes[l];
    const int out = m.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        w(r, c) = (2.0 * u - 1.0) * limit;
      }
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Vector::Zero(out));
  }
  return m;
}

Eigen::Index MlpModel::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Vector MlpModel::flatten() const {
  Vector p(parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.segment(offset, weights[l].size()) = Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
    offset += weights[l].size();
    p.segment(offset, biases[l].size()) = biases[l];
    offset += biases[l].size();
  }
  return p;
}

void MlpModel::assign(const Vector& params) {
  if (params.size() != parameter_count()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter vector length does not match the network");
  }
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Vector>(weights[l].data(), weights[l].size()) = params.segment(offset, weights[l].size());
    offset += weights[l].size();
    biases[l] = params.segment(offset, biases[l].size());
    offset += biases[l].size();
  }
}

Vector MlpModel::logits(const Vector& x) const {
  if (layer_sizes.empty() || x.size() != layer_sizes.front()) {
    throw Error(ErrorCode::DimensionMismatch, "input width does not match the network");
  }
  Vector a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Vector z = weights[l] * a + biases[l];
    a = (l + 1 < weights.size()) ? MlpObjective::activate(z, activation) : z;
  }
  return a;
}

ObjectiveValue svm_objective(const LinearModel& model, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  check_shapes(model.weights.size(), data);
  LinearObjective obj(ModelKind::Svm, data.cols(), with_intercept(cfg, model.fit_intercept));
  ObjectiveValue out;
  out.value = full_objective(obj, linear_params(model), data, &out.gradient);
  return out;
}

ObjectiveValue logistic_objective(const LinearModel& model, const Dataset& data,
                                  const TrainConfig& cfg) {
  data.validate();
  check_shapes(model.weights.size(), data);
  LinearObjective obj(ModelKind::Logistic, data.cols(), with_intercept(cfg, model.fit_intercept));
  ObjectiveValue out;
  out.value = full_objective(obj, linear_params(model), data, &out.gradient);
  return out;
}

ObjectiveValue mlp_objective(const MlpModel& model, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  check_shapes(model.layer_sizes.empty() ? 0 : model.layer_sizes.front(), data);
  MlpObjective obj(model, cfg);
  ObjectiveValue out;
  out.value = full_objective(obj, model.flatten(), data, &out.gradient);
  return out;
}

TrainResult sgd_train(ModelKind kind, const Dataset& data, const TrainConfig& cfg,
                      const std::optional<Vector>& initial) {
  cfg.validate();
  data.validate();
  TrainResult result;
  result.kind = kind;

  std::unique_ptr<Objective> obj;
  Vector params;
  if (kind == ModelKind::Mlp) {
    result.mlp = MlpModel::seeded(static_cast<int>(data.cols()), cfg.hidden_layers, cfg.activation,
                                  cfg.seed ^ 0xA5A5A5A5ULL);
    params = result.mlp.flatten();
    obj = std::make_unique<MlpObjective>(result.mlp, cfg);
  } else {
    params = Vector::Zero(data.cols() + 1);
    obj = std::make_unique<LinearObjective>(kind, data.cols(), cfg);
  }
  if (initial) {
    if (initial->size() != params.size()) {
      throw Error(ErrorCode::ShapeMismatch, "initial parameter vector has the wrong length");
    }
    params = *initial;
  }

  const Eigen::Index n = data.rows();
  const double reg_scale = obj->reg_scale(n);
  auto record = [&](int epoch) {
    const double value = full_objective(*obj, params, data, nullptr);
    if (!std::isfinite(value) || !params.allFinite()) {
      throw Error(ErrorCode::DivergenceDetected,
                  "objective became non-finite at epoch " + std::to_string(epoch) +
                      "; lower the learning rate");
    }
    result.objective_trace.push_back(value);
  };
  record(0);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order = all_rows(n);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Vector grad;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      obj->evaluate(params, data, Rows(order.data() + start, len), reg_scale, &grad);
      params -= cfg.learning_rate * grad;
    }
    record(epoch);
  }

  if (kind == ModelKind::Mlp) {
    result.mlp.assign(params);
  } else {
    result.linear.weights = params.head(data.cols());
    result.linear.bias = cfg.fit_intercept ? params(data.cols()) : 0.0;
    result.linear.fit_intercept = cfg.fit_intercept;
  }
  return result;
}

int predict(const LinearModel& model, const Vector& x) {
  if (x.size() != model.weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature vector width does not match the model");
  }
  const double score = model.weights.dot(x) + (model.fit_intercept ? model.bias : 0.0);
  return score >= 0.0 ? 1 : -1;
}

int predict(const MlpModel& model, const Vector& x) {
  const Vector z = model.logits(x);
  return z(1) >= z(0) ? 1 : -1;
}

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() < 1) throw Error(ErrorCode::EmptyDataset, "cannot standardize zero rows");
  Standardizer s;
  s.mean = features.colwise().mean().transpose();
  s.scale.resize(features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double var = (features.col(c).array() - s.mean(c)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  if (features.cols() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature width does not match the standardizer");
  }
  return ((features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Vector Standardizer::apply(const Vector& x) const {
  if (x.size() != mean.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature width does not match the standardizer");
  }
  return ((x - mean).array() / scale.array()).matrix();
}

int Classifier::predict(const Vector& x) const {
  const Vector z = standardizer.apply(x);
  return kind == ModelKind::Mlp ? qas::predict(mlp, z) : qas::predict(linear, z);
}

Classifier train_classifier(ModelKind kind, const Dataset& train, const TrainConfig& cfg) {
  train.validate();
  Classifier c;
  c.kind = kind;
  c.config = cfg;
  c.standardizer = Standardizer::fit(train.features);
  Dataset scaled{c.standardizer.apply(train.features), train.labels};
  TrainResult r = sgd_train(kind, scaled, cfg);
  c.linear = std::move(r.linear);
  c.mlp = std::move(r.mlp);
  return c;
}

namespace {

template <typename Predictor>
double accuracy_of(const Predictor& predict_row, const Dataset& test) {
  if (test.rows() < 1) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    if (predict_row(Vector(test.features.row(r).transpose())) == test.labels[static_cast<std::size_t>(r)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

}  // namespace

double evaluate_accuracy(const LinearModel& model, const Dataset& test) {
  return accuracy_of([&](const Vector& x) { return predict(model, x); }, test);
}

double evaluate_accuracy(const MlpModel& model, const Dataset& test) {
  return accuracy_of([&](const Vector& x) { return predict(model, x); }, test);
}

double evaluate_accuracy(const Classifier& model, const Dataset& test) {
  return accuracy_of([&](const Vector& x) { return model.predict(x); }, test);
}

namespace {

nlohmann::ordered_json vec_json(const Vector& v) {
  return nlohmann::ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector json_vec(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string save_model(const Classifier& model) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(model.kind));
  j["dims"] = model.standardizer.mean.size();
  if (model.kind == ModelKind::Mlp) {
    auto layers = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < model.mlp.weights.size(); ++l) {
      const Matrix& w = model.mlp.weights[l];
      auto rows = nlohmann::ordered_json::array();
      for (Eigen::Index r = 0; r < w.rows(); ++r) rows.push_back(vec_json(w.row(r).transpose()));
      layers.push_back({{"weights", rows}, {"bias", vec_json(model.mlp.biases[l])}});
    }
    j["weights"] = layers;
    j["bias"] = nullptr;
    j["layer_sizes"] = model.mlp.layer_sizes;
    j["activation"] = model.mlp.activation == Activation::ReLU ? "relu" : "tanh";
  } else {
    j["weights"] = vec_json(model.linear.weights);
    j["bias"] = model.linear.bias;
    j["fit_intercept"] = model.linear.fit_intercept;
  }
  j["standardization"] = {{"mean", vec_json(model.standardizer.mean)},
                          {"scale", vec_json(model.standardizer.scale)}};
  const auto& c = model.config;
  j["config"] = {{"l1", c.l1},
                 {"l2", c.l2},
                 {"learning_rate", c.learning_rate},
                 {"epochs", c.epochs},
                 {"batch_size", c.batch_size},
                 {"hidden_layers", c.hidden_layers}};
  j["seed"] = c.seed;
  return j.dump(2);
}

Classifier load_model(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    Classifier m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.standardizer.mean = json_vec(j.at("standardization").at("mean"));
    m.standardizer.scale = json_vec(j.at("standardization").at("scale"));
    const auto& c = j.at("config");
    m.config.l1 = c.at("l1").get<double>();
    m.config.l2 = c.at("l2").get<double>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.hidden_layers = c.at("hidden_layers").get<std::vector<int>>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    if (m.kind == ModelKind::Mlp) {
      m.mlp.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
      m.mlp.activation = j.at("activation").get<std::string>() == "tanh" ? Activation::Tanh : Activation::ReLU;
      m.config.activation = m.mlp.activation;
      for (const auto& layer : j.at("weights")) {
        const auto& rows = layer.at("weights");
        Matrix w(static_cast<Eigen::Index>(rows.size()),
                 rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r) w.row(static_cast<Eigen::Index>(r)) = json_vec(rows[r]).transpose();
        m.mlp.weights.push_back(std::move(w));
        m.mlp.biases.push_back(json_vec(layer.at("bias")));
      }
    } else {
      m.linear.weights = json_vec(j.at("weights"));
      m.linear.bias = j.at("bias").get<double>();
      m.linear.fit_intercept = j.value("fit_intercept", true);
      m.config.fit_intercept = m.linear.fit_intercept;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("model JSON: ") + e.what());
  }
}

}  // namespace qas
