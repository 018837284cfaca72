#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "qas/analytics.hpp"
#include "qas/embedding.hpp"
#include "qas/market.hpp"
#include "qas/models.hpp"
#include "qas/regression.hpp"
#include "qas/switching_index.hpp"
#include "qas/transcript.hpp"

namespace qas {

enum class FeatureSet { IndexOnly, BenchmarkOnly, BenchmarkPlusIndex };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);

struct BackendConfig {
  enum class Kind { Builtin, Bridge };
  Kind kind = Kind::Builtin;
  EncoderConfig encoder;
  std::string endpoint = "http://127.0.0.1:8008";
  std::chrono::milliseconds timeout{30000};
};

std::unique_ptr<EmbeddingBackend> make_backend(const BackendConfig& config);

struct RunConfig {
  std::filesystem::path transcript_dir;
  std::filesystem::path price_dir;
  std::filesystem::path output_dir;
  BackendConfig backend;
  LabelSpec label_spec;
  PositiveClass positive_class = PositiveClass::Up;
  Date split_date{2016, 1, 1};
  std::vector<FeatureSet> feature_sets = {FeatureSet::BenchmarkOnly, FeatureSet::BenchmarkPlusIndex,
                                          FeatureSet::IndexOnly};
  TrainConfig train;
  Weighting weighting = Weighting::PerPair;
  unsigned workers = 0;  // 0 = hardware concurrency
};

// Why an input file or call did not make it into the records.
struct Exclusion {
  std::string source;
  ErrorCode reason;
  std::string message;
};

// Index records with aligned benchmark features, sorted by (symbol, date).
struct IndexedCalls {
  std::vector<CallIndexRecord> records;
  std::vector<EmbeddingVector> benchmark;
  std::vector<Exclusion> excluded;
  std::size_t total_inputs = 0;
};

// Parse, pair, embed and score one call. The benchmark vector is the mean of
// the embeddings of every non-operator turn from the first paired question on.
struct CallFeatures {
  CallIndexRecord record;
  EmbeddingVector benchmark;
};
CallFeatures process_call(const EarningsCall& paired_call, const EmbeddingBackend& backend,
                          Weighting weighting);

// Regular, non-hidden files of a directory sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir);

// Indexes named in-memory transcripts (source name, raw text).
IndexedCalls index_transcripts(const std::vector<std::pair<std::string, std::string>>& inputs,
                               const EmbeddingBackend& backend, Weighting weighting,
                               unsigned workers = 0);

std::string manifest_json(const IndexedCalls& calls, const std::string& backend_name);
std::string benchmark_to_csv(const IndexedCalls& calls);
std::map<std::pair<std::string, std::string>, EmbeddingVector> benchmark_from_csv(std::string_view text);

// Reads `transcript_dir`, writes index.csv, index.jsonl, benchmark.csv and
// manifest.json to `output_dir`. Throws NoUsableCalls.
IndexedCalls run_index(const RunConfig& config, const EmbeddingBackend& backend);

struct LabeledCalls {
  std::vector<LabeledCall> calls;
  std::vector<Exclusion> excluded;
};

// Looks up `<price_dir>/<SYMBOL>.csv` for each record.
LabeledCalls label_records(const std::vector<CallIndexRecord>& records,
                           const std::filesystem::path& price_dir, const LabelSpec& spec);

struct AccuracyRow {
  FeatureSet feature_set;
  double svm = 0.0;
  double logistic = 0.0;
  double nn = 0.0;
};

struct EvaluationReport {
  std::vector<AccuracyRow> rows;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Trains SVM, logistic and NN per feature set on calls dated before
// split_date and reports test accuracy on the rest. Throws EmptySplit.
EvaluationReport evaluate_models(
    const std::vector<LabeledCall>& calls,
    const std::map<std::pair<std::string, std::string>, EmbeddingVector>& benchmark,
    const RunConfig& config);

std::string accuracy_to_csv(const EvaluationReport& report);

struct AnalyticsBundle {
  std::vector<CategorySummary> index_summary;
  std::vector<CategorySummary> return_summary;
  std::vector<BoxSummary> index_boxes;
  std::vector<BoxSummary> return_boxes;
  std::vector<YearlyTrendPoint> index_trend;
  std::vector<YearlyTrendPoint> return_trend;
};

AnalyticsBundle run_analytics(const std::vector<LabeledCall>& calls);
void write_analytics(const AnalyticsBundle& bundle, const std::filesystem::path& dir);

struct StudyReport {
  IndexedCalls indexed;
  LabeledCalls labeled;
  AnalyticsBundle analytics;
  SectorRegressions regressions;
  EvaluationReport evaluation;
};

// Full run: index, label, analytics, regression and classifier evaluation.
StudyReport run_study(const RunConfig& config, const EmbeddingBackend& backend);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace qas
