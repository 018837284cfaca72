#include "qas/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qas/csv.hpp"

namespace qas {

namespace fs = std::filesystem;

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::IndexOnly: return "index";
    case FeatureSet::BenchmarkOnly: return "benchmark";
    case FeatureSet::BenchmarkPlusIndex: return "benchmark+index";
  }
  return "unknown";
}

FeatureSet parse_feature_set(std::string_view name) {
  const std::string key = to_lower(name);
  if (key == "index" || key == "index-only" || key == "indexonly") return FeatureSet::IndexOnly;
  if (key == "benchmark" || key == "benchmark-only" || key == "benchmarkonly") return FeatureSet::BenchmarkOnly;
  if (key == "benchmark+index" || key == "benchmark-plus-index" || key == "benchmarkplusindex") {
    return FeatureSet::BenchmarkPlusIndex;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature set '" + std::string(name) + "'");
}

std::unique_ptr<EmbeddingBackend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendConfig::Kind::Bridge) {
    return std::make_unique<BridgeBackend>(config.endpoint, config.timeout);
  }
  return std::make_unique<BuiltinBackend>(config.encoder);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<fs::path> list_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

CallFeatures process_call(const EarningsCall& call, const EmbeddingBackend& backend,
                          Weighting weighting) {
  std::vector<std::string> texts;
  texts.reserve(call.qa_pairs.size() * 2);
  for (const auto& p : call.qa_pairs) {
    texts.push_back(p.question_text);
    texts.push_back(p.answer_text);
  }

  // Discussion turns start at the first analyst turn that opens a pair.
  std::size_t first = call.turns.size();
  if (!call.qa_pairs.empty()) {
    const auto& opener = call.qa_pairs.front();
    for (std::size_t i = 0; i < call.turns.size(); ++i) {
      if (call.turns[i].role == Role::Analyst && call.turns[i].speaker_name == opener.analyst_name) {
        first = i;
        break;
      }
    }
  }
  std::size_t discussion_turns = 0;
  for (std::size_t i = first; i < call.turns.size(); ++i) {
    if (call.turns[i].role == Role::Operator) continue;
    texts.push_back(call.turns[i].text);
    ++discussion_turns;
  }

  const auto vectors = backend.embed(texts);
  std::vector<EmbeddedPair> pairs;
  for (std::size_t k = 0; k < call.qa_pairs.size(); ++k) {
    pairs.push_back({call.qa_pairs[k], vectors[2 * k], vectors[2 * k + 1]});
  }
  CallFeatures out;
  out.record = score_call(pairs, {call.company_symbol, call.call_date, call.sector}, weighting);
  out.benchmark = EmbeddingVector::Zero(static_cast<Eigen::Index>(backend.dimension()));
  for (std::size_t k = 0; k < discussion_turns; ++k) out.benchmark += vectors[2 * call.qa_pairs.size() + k];
  if (discussion_turns > 0) out.benchmark /= static_cast<double>(discussion_turns);
  return out;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

struct Outcome {
  std::optional<CallFeatures> features;
  std::optional<Exclusion> exclusion;
};

}  // namespace

IndexedCalls index_transcripts(const std::vector<std::pair<std::string, std::string>>& inputs,
                               const EmbeddingBackend& backend, Weighting weighting,
                               unsigned workers) {
  std::vector<Outcome> outcomes(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    const auto& [source, raw] = inputs[i];
    try {
      const EarningsCall call = segment_and_pair(parse_transcript(raw, detect_format(raw)));
      outcomes[i].features = process_call(call, backend, weighting);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BridgeUnreachable || e.code() == ErrorCode::BridgeProtocolError ||
          e.code() == ErrorCode::DimensionMismatch) {
        outcomes[i].exclusion = Exclusion{source, e.code(), "fatal: " + std::string(e.what())};
      } else {
        outcomes[i].exclusion = Exclusion{source, e.code(), e.what()};
      }
    }
  });

  IndexedCalls result;
  result.total_inputs = inputs.size();
  std::vector<std::pair<CallFeatures, std::string>> kept;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].exclusion) {
      const auto& ex = *outcomes[i].exclusion;
      if (ex.message.rfind("fatal: ", 0) == 0) throw Error(ex.reason, ex.message.substr(7));
      result.excluded.push_back(ex);
    } else {
      kept.emplace_back(std::move(*outcomes[i].features), inputs[i].first);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    const auto& ra = a.first.record;
    const auto& rb = b.first.record;
    return ra.company_symbol != rb.company_symbol ? ra.company_symbol < rb.company_symbol
                                                  : ra.call_date < rb.call_date;
  });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = kept[i].first.record;
    if (!result.records.empty() && result.records.back().company_symbol == r.company_symbol &&
        result.records.back().call_date == r.call_date) {
      result.excluded.push_back({kept[i].second, ErrorCode::MalformedInput,
                                 "duplicate call for " + r.company_symbol + " " + r.call_date.iso()});
      continue;
    }
    result.records.push_back(r);
    result.benchmark.push_back(std::move(kept[i].first.benchmark));
  }
  return result;
}

std::string manifest_json(const IndexedCalls& calls, const std::string& backend_name) {
  nlohmann::ordered_json j;
  j["backend"] = backend_name;
  j["total_inputs"] = calls.total_inputs;
  j["indexed"] = calls.records.size();
  j["excluded"] = calls.excluded.size();
  std::map<std::string, std::size_t> by_reason;
  for (const auto& e : calls.excluded) ++by_reason[std::string(to_string(e.reason))];
  j["excluded_by_reason"] = by_reason;
  auto list = nlohmann::ordered_json::array();
  for (const auto& e : calls.excluded) {
    list.push_back({{"source", e.source}, {"reason", std::string(to_string(e.reason))}, {"message", e.message}});
  }
  j["exclusions"] = list;
  return j.dump(2) + "\n";
}

std::string benchmark_to_csv(const IndexedCalls& calls) {
  const std::size_t dim = calls.benchmark.empty() ? 0 : static_cast<std::size_t>(calls.benchmark.front().size());
  std::string out = "symbol,date";
  for (std::size_t k = 0; k < dim; ++k) out += ",f" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < calls.records.size(); ++i) {
    out += csv::escape(calls.records[i].company_symbol) + "," + calls.records[i].call_date.iso();
    for (Eigen::Index k = 0; k < calls.benchmark[i].size(); ++k) {
      out += "," + csv::format_double(calls.benchmark[i](k));
    }
    out += "\n";
  }
  return out;
}

std::map<std::pair<std::string, std::string>, EmbeddingVector> benchmark_from_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  if (table.header.size() < 2 || table.column("symbol") != 0 || table.column("date") != 1) {
    throw Error(ErrorCode::MalformedInput, "benchmark CSV must start with symbol,date", "line 1");
  }
  std::map<std::pair<std::string, std::string>, EmbeddingVector> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]);
    EmbeddingVector v(static_cast<Eigen::Index>(row.size() - 2));
    for (std::size_t k = 2; k < row.size(); ++k) v(static_cast<Eigen::Index>(k - 2)) = csv::to_double(row[k], where);
    const Date d = Date::parse_or_throw(row[1], where);
    out.emplace(std::make_pair(row[0], d.iso()), std::move(v));
  }
  return out;
}

IndexedCalls run_index(const RunConfig& config, const EmbeddingBackend& backend) {
  std::vector<std::pair<std::string, std::string>> inputs;
  for (const auto& path : list_files(config.transcript_dir)) {
    inputs.emplace_back(path.filename().string(), read_file(path));
  }
  IndexedCalls calls = index_transcripts(inputs, backend, config.weighting, config.workers);
  std::cerr << "[index] " << calls.records.size() << " of " << calls.total_inputs
            << " transcripts indexed, " << calls.excluded.size() << " excluded\n";
  if (!config.output_dir.empty()) {
    write_file(config.output_dir / "manifest.json", manifest_json(calls, backend.name()));
  }
  if (calls.records.empty()) throw Error(ErrorCode::NoUsableCalls, "no transcript produced an index record");
  if (!config.output_dir.empty()) {
    write_file(config.output_dir / "index.csv", records_to_csv(calls.records));
    write_file(config.output_dir / "index.jsonl", records_to_jsonl(calls.records));
    write_file(config.output_dir / "benchmark.csv", benchmark_to_csv(calls));
  }
  return calls;
}

LabeledCalls label_records(const std::vector<CallIndexRecord>& records, const fs::path& price_dir,
                           const LabelSpec& spec) {
  LabeledCalls out;
  std::map<std::string, std::optional<PriceSeries>> cache;
  for (const auto& r : records) {
    const std::string source = r.company_symbol + " " + r.call_date.iso();
    auto it = cache.find(r.company_symbol);
    if (it == cache.end()) {
      std::optional<PriceSeries> series;
      const fs::path file = price_dir / (r.company_symbol + ".csv");
      try {
        series = load_prices(read_file(file), r.company_symbol);
      } catch (const Error& e) {
        out.excluded.push_back({source, e.code(), e.what()});
      }
      it = cache.emplace(r.company_symbol, std::move(series)).first;
      if (!it->second) continue;
    } else if (!it->second) {
      out.excluded.push_back({source, ErrorCode::Io, "no usable price file for " + r.company_symbol});
      continue;
    }
    try {
      out.calls.push_back(label_call(r, *it->second, spec));
    } catch (const Error& e) {
      out.excluded.push_back({source, e.code(), e.what()});
    }
  }
  return out;
}

namespace {

Dataset build_dataset(const std::vector<const LabeledCall*>& calls,
                      const std::map<std::pair<std::string, std::string>, EmbeddingVector>& benchmark,
                      FeatureSet set, PositiveClass positive) {
  Dataset d;
  if (calls.empty()) return d;
  auto bench = [&](const LabeledCall& c) -> const EmbeddingVector& {
    auto it = benchmark.find({c.record.company_symbol, c.record.call_date.iso()});
    if (it == benchmark.end()) {
      throw Error(ErrorCode::MalformedInput, "no benchmark feature for " + c.record.company_symbol +
                                                 " " + c.record.call_date.iso());
    }
    return it->second;
  };
  Eigen::Index width = 1;
  if (set != FeatureSet::IndexOnly) {
    width = bench(*calls.front()).size() + (set == FeatureSet::BenchmarkPlusIndex ? 1 : 0);
  }
  d.features.resize(static_cast<Eigen::Index>(calls.size()), width);
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const LabeledCall& c = *calls[i];
    if (set == FeatureSet::IndexOnly) {
      d.features(r, 0) = c.record.index;
    } else {
      const auto& b = bench(c);
      if (b.size() + (set == FeatureSet::BenchmarkPlusIndex ? 1 : 0) != width) {
        throw Error(ErrorCode::DimensionMismatch, "benchmark features have inconsistent widths");
      }
      d.features.row(r).head(b.size()) = b.transpose();
      if (set == FeatureSet::BenchmarkPlusIndex) d.features(r, width - 1) = c.record.index;
    }
    d.labels.push_back(orient(c.label, positive));
  }
  return d;
}

}  // namespace

EvaluationReport evaluate_models(
    const std::vector<LabeledCall>& calls,
    const std::map<std::pair<std::string, std::string>, EmbeddingVector>& benchmark,
    const RunConfig& config) {
  std::vector<const LabeledCall*> sorted;
  for (const auto& c : calls) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(), [](const LabeledCall* a, const LabeledCall* b) {
    return a->record.company_symbol != b->record.company_symbol
               ? a->record.company_symbol < b->record.company_symbol
               : a->record.call_date < b->record.call_date;
  });
  std::vector<const LabeledCall*> train;
  std::vector<const LabeledCall*> test;
  for (const auto* c : sorted) (c->record.call_date < config.split_date ? train : test).push_back(c);
  if (train.empty() || test.empty()) {
    throw Error(ErrorCode::EmptySplit, "split at " + config.split_date.iso() + " leaves " +
                                           std::to_string(train.size()) + " training and " +
                                           std::to_string(test.size()) + " test calls");
  }

  EvaluationReport report;
  report.train_size = train.size();
  report.test_size = test.size();
  for (FeatureSet set : config.feature_sets) {
    const Dataset train_set = build_dataset(train, benchmark, set, config.positive_class);
    const Dataset test_set = build_dataset(test, benchmark, set, config.positive_class);
    AccuracyRow row{set};
    row.svm = evaluate_accuracy(train_classifier(ModelKind::Svm, train_set, config.train), test_set);
    row.logistic = evaluate_accuracy(train_classifier(ModelKind::Logistic, train_set, config.train), test_set);
    row.nn = evaluate_accuracy(train_classifier(ModelKind::Mlp, train_set, config.train), test_set);
    std::cerr << "[evaluate] " << to_string(set) << ": svm " << row.svm << ", logistic "
              << row.logistic << ", nn " << row.nn << "\n";
    report.rows.push_back(row);
  }
  return report;
}

std::string accuracy_to_csv(const EvaluationReport& report) {
  std::string out = "feature_set,svm,logistic,nn,train_size,test_size\n";
  for (const auto& r : report.rows) {
    out += csv::escape(to_string(r.feature_set)) + "," + csv::format_double(r.svm) + "," +
           csv::format_double(r.logistic) + "," + csv::format_double(r.nn) + "," +
           std::to_string(report.train_size) + "," + std::to_string(report.test_size) + "\n";
  }
  return out;
}

AnalyticsBundle run_analytics(const std::vector<LabeledCall>& calls) {
  std::vector<CategoryValue> index_values;
  std::vector<CategoryValue> return_values;
  std::vector<std::pair<Date, double>> index_by_date;
  std::vector<std::pair<Date, double>> return_by_date;
  for (const auto& c : calls) {
    index_values.push_back({c.record.sector, c.record.index});
    return_values.push_back({c.record.sector, c.relative_change});
    index_by_date.emplace_back(c.record.call_date, c.record.index);
    return_by_date.emplace_back(c.record.call_date, c.relative_change);
  }
  AnalyticsBundle b;
  b.index_summary = summarize_categories(index_values);
  b.return_summary = summarize_categories(return_values);
  b.index_boxes = box_summaries(index_values);
  b.return_boxes = box_summaries(return_values);
  b.index_trend = yearly_trend(index_by_date);
  b.return_trend = yearly_trend(return_by_date);
  return b;
}

void write_analytics(const AnalyticsBundle& b, const fs::path& dir) {
  write_file(dir / "category_summary.csv", summaries_to_csv(b.index_summary));
  write_file(dir / "category_summary.json", summaries_to_json(b.index_summary));
  write_file(dir / "category_summary_returns.csv", summaries_to_csv(b.return_summary));
  write_file(dir / "category_summary_returns.json", summaries_to_json(b.return_summary));
  write_file(dir / "box_index.csv", boxes_to_csv(b.index_boxes));
  write_file(dir / "box_index.json", boxes_to_json(b.index_boxes));
  write_file(dir / "box_returns.csv", boxes_to_csv(b.return_boxes));
  write_file(dir / "box_returns.json", boxes_to_json(b.return_boxes));
  write_file(dir / "yearly_index.csv", trend_to_csv(b.index_trend));
  write_file(dir / "yearly_index.json", trend_to_json(b.index_trend));
  write_file(dir / "yearly_returns.csv", trend_to_csv(b.return_trend));
  write_file(dir / "yearly_returns.json", trend_to_json(b.return_trend));
}

namespace {

std::string study_json(const RunConfig& config, const StudyReport& report, const std::string& backend) {
  nlohmann::ordered_json j;
  j["backend"] = backend;
  j["weighting"] = std::string(to_string(config.weighting));
  j["label"] = {{"kind", config.label_spec.kind == LabelKind::Absolute ? "absolute" : "relative"},
                {"tau", config.label_spec.tau},
                {"positive_class", config.positive_class == PositiveClass::Up ? "up" : "down"}};
  j["split_date"] = config.split_date.iso();
  const auto& t = config.train;
  j["train"] = {{"l1", t.l1},           {"l2", t.l2},
                {"learning_rate", t.learning_rate}, {"epochs", t.epochs},
                {"batch_size", t.batch_size},       {"seed", t.seed},
                {"fit_intercept", t.fit_intercept}, {"hidden_layers", t.hidden_layers}};
  j["encoder_seed"] = config.backend.encoder.seed;
  j["indexed_calls"] = report.indexed.records.size();
  j["labeled_calls"] = report.labeled.calls.size();
  auto label_excl = nlohmann::ordered_json::array();
  for (const auto& e : report.labeled.excluded) {
    label_excl.push_back({{"source", e.source}, {"reason", std::string(to_string(e.reason))}});
  }
  j["label_exclusions"] = label_excl;
  j["train_size"] = report.evaluation.train_size;
  j["test_size"] = report.evaluation.test_size;
  return j.dump(2) + "\n";
}

}  // namespace

StudyReport run_study(const RunConfig& config, const EmbeddingBackend& backend) {
  StudyReport report;
  report.indexed = run_index(config, backend);
  report.labeled = label_records(report.indexed.records, config.price_dir, config.label_spec);
  std::cerr << "[label] " << report.labeled.calls.size() << " calls labeled, "
            << report.labeled.excluded.size() << " excluded\n";
  if (report.labeled.calls.empty()) throw Error(ErrorCode::NoUsableCalls, "no call could be labeled");

  report.analytics = run_analytics(report.labeled.calls);
  report.regressions = fit_by_sector(report.labeled.calls);

  std::map<std::pair<std::string, std::string>, EmbeddingVector> bench;
  for (std::size_t i = 0; i < report.indexed.records.size(); ++i) {
    const auto& r = report.indexed.records[i];
    bench.emplace(std::make_pair(r.company_symbol, r.call_date.iso()), report.indexed.benchmark[i]);
  }
  report.evaluation = evaluate_models(report.labeled.calls, bench, config);

  if (!config.output_dir.empty()) {
    write_file(config.output_dir / "labeled.csv", labeled_to_csv(report.labeled.calls));
    write_analytics(report.analytics, config.output_dir);
    write_file(config.output_dir / "regression.csv", regressions_to_csv(report.regressions));
    write_file(config.output_dir / "accuracy.csv", accuracy_to_csv(report.evaluation));
    write_file(config.output_dir / "study.json", study_json(config, report, backend.name()));
  }
  return report;
}

}  // namespace qas
