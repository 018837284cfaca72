#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qas {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// n x p features with labels in {-1, +1}.
struct Dataset {
  Matrix features;
  std::vector<int> labels;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
  // Throws EmptyDataset / InvalidArgument on violated invariants.
  void validate() const;
};

enum class ModelKind { Svm, Logistic, Mlp };
enum class Activation { ReLU, Tanh };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Regularization strengths are named by the norm they weight:
//   SVM       mean hinge      + (l2 / 2)|w|^2 + l1 |w|_1
//   Logistic  mean log-loss   + (l2 / 2)|w|^2
//   MLP       summed softmax  + l1 |theta|_1 + (l2 / 2)|theta|^2
struct TrainConfig {
  double l1 = 0.0;
  double l2 = 0.01;
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 42;
  bool fit_intercept = true;
  std::vector<int> hidden_layers = {8};
  Activation activation = Activation::ReLU;

  void validate() const;
};

// score = w.x + bias. The bias acts as the weight of an appended constant-1
// feature and is regularized with the rest of w.
struct LinearModel {
  Vector weights;
  double bias = 0.0;
  bool fit_intercept = true;
};

// layer_sizes = {p, hidden..., 2}; weights[l] is (layer_sizes[l+1] x layer_sizes[l]).
// Hidden layers apply the activation; the last layer emits two logits
// (index 1 is the +1 class).
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::ReLU;

  static MlpModel seeded(int inputs, const std::vector<int>& hidden, Activation activation,
                         std::uint64_t seed);
  Eigen::Index parameter_count() const;
  Vector flatten() const;
  void assign(const Vector& params);
  Vector logits(const Vector& x) const;
};

struct ObjectiveValue {
  double value = 0.0;
  Vector gradient;  // linear: [w..., bias]; MLP: per layer W (column-major) then b
};

ObjectiveValue svm_objective(const LinearModel& model, const Dataset& data, const TrainConfig& cfg);
ObjectiveValue logistic_objective(const LinearModel& model, const Dataset& data,
                                  const TrainConfig& cfg);
ObjectiveValue mlp_objective(const MlpModel& model, const Dataset& data, const TrainConfig& cfg);

struct TrainResult {
  ModelKind kind = ModelKind::Logistic;
  LinearModel linear;
  MlpModel mlp;
  // Full objective before training and after every epoch.
  std::vector<double> objective_trace;
};

// Minibatch SGD with a constant step and a seeded reshuffle each epoch.
// Linear models start at zero, MLPs from seeded weights unless `initial`
// parameters are given. Throws DivergenceDetected on non-finite values.
TrainResult sgd_train(ModelKind kind, const Dataset& data, const TrainConfig& cfg,
                      const std::optional<Vector>& initial = std::nullopt);

// sign(score) with ties to +1.
int predict(const LinearModel& model, const Vector& x);
// argmax of the logits with ties to +1.
int predict(const MlpModel& model, const Vector& x);

// z-score statistics fitted on training features only.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
  Vector apply(const Vector& x) const;
};

// A trained model bundled with its input standardization.
struct Classifier {
  ModelKind kind = ModelKind::Logistic;
  LinearModel linear;
  MlpModel mlp;
  Standardizer standardizer;
  TrainConfig config;

  // Standardizes `x` and predicts.
  int predict(const Vector& x) const;
};

// Fits the standardizer on `train`, then trains on standardized features.
Classifier train_classifier(ModelKind kind, const Dataset& train, const TrainConfig& cfg);

// Fraction of correct predictions. Throws EmptyDataset.
double evaluate_accuracy(const LinearModel& model, const Dataset& test);
double evaluate_accuracy(const MlpModel& model, const Dataset& test);
double evaluate_accuracy(const Classifier& model, const Dataset& test);

std::string save_model(const Classifier& model);
Classifier load_model(std::string_view json);

}  // namespace qas
