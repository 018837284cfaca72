#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qas/csv.hpp"
#include "qas/pipeline.hpp"
#include "qas/synthetic.hpp"

namespace {

struct Options {
  std::string transcripts;
  std::string prices;
  std::string out = "out";
  std::string input;
  std::string index_csv;
  std::string labeled_csv;
  std::string benchmark_csv;

  std::string backend = "builtin";
  std::string endpoint = "http://127.0.0.1:8008";
  int timeout_ms = 30000;
  std::string pooling = "mean";
  std::uint64_t encoder_seed = qas::EncoderConfig{}.seed;
  std::string weighting = "pair";
  unsigned workers = 0;

  std::string label = "absolute";
  double tau = 0.0;
  std::string positive = "up";
  std::string split_date = "2016-01-01";
  std::vector<std::string> feature_sets = {"benchmark", "benchmark+index", "index"};

  double l1 = 0.0;
  double l2 = 0.01;
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 16;
  std::vector<int> hidden = {8};
  std::string activation = "relu";
  std::uint64_t seed = 42;

  int companies = qas::SyntheticOptions{}.companies;
  int calls_per_company = qas::SyntheticOptions{}.calls_per_company;
  int pairs_per_call = qas::SyntheticOptions{}.pairs_per_call;
  double slope = qas::SyntheticOptions{}.slope;
  double noise_sd = qas::SyntheticOptions{}.noise_sd;
  bool monologue = false;
};

qas::RunConfig to_run_config(const Options& o) {
  qas::RunConfig cfg;
  cfg.transcript_dir = o.transcripts;
  cfg.price_dir = o.prices;
  cfg.output_dir = o.out;
  cfg.backend.kind = qas::to_lower(o.backend) == "bridge" ? qas::BackendConfig::Kind::Bridge
                                                         : qas::BackendConfig::Kind::Builtin;
  if (qas::to_lower(o.backend) != "bridge" && qas::to_lower(o.backend) != "builtin") {
    throw qas::Error(qas::ErrorCode::InvalidArgument, "unknown backend '" + o.backend + "'");
  }
  cfg.backend.endpoint = o.endpoint;
  cfg.backend.timeout = std::chrono::milliseconds(o.timeout_ms);
  cfg.backend.encoder.seed = o.encoder_seed;
  const std::string pooling = qas::to_lower(o.pooling);
  if (pooling == "first" || pooling == "first-token" || pooling == "cls") {
    cfg.backend.encoder.pooling = qas::Pooling::FirstToken;
  } else if (pooling != "mean") {
    throw qas::Error(qas::ErrorCode::InvalidArgument, "unknown pooling '" + o.pooling + "'");
  }
  cfg.weighting = qas::parse_weighting(o.weighting);
  cfg.workers = o.workers;
  cfg.label_spec = qas::parse_label_spec(o.label, o.tau);
  cfg.positive_class = qas::parse_positive_class(o.positive);
  cfg.split_date = qas::Date::parse_or_throw(o.split_date, "--split-date");
  cfg.feature_sets.clear();
  for (const auto& f : o.feature_sets) cfg.feature_sets.push_back(qas::parse_feature_set(f));
  cfg.train.l1 = o.l1;
  cfg.train.l2 = o.l2;
  cfg.train.learning_rate = o.learning_rate;
  cfg.train.epochs = o.epochs;
  cfg.train.batch_size = o.batch_size;
  cfg.train.hidden_layers = o.hidden;
  const std::string act = qas::to_lower(o.activation);
  if (act == "tanh") {
    cfg.train.activation = qas::Activation::Tanh;
  } else if (act != "relu") {
    throw qas::Error(qas::ErrorCode::InvalidArgument, "unknown activation '" + o.activation + "'");
  }
  cfg.train.seed = o.seed;
  cfg.train.validate();
  cfg.backend.encoder.validate();
  return cfg;
}

std::vector<qas::LabeledCall> load_labeled(const Options& o) {
  const std::string path = o.labeled_csv.empty() ? (std::filesystem::path(o.out) / "labeled.csv").string()
                                                 : o.labeled_csv;
  auto calls = qas::labeled_from_csv(qas::read_file(path));
  if (calls.empty()) throw qas::Error(qas::ErrorCode::NoUsableCalls, path + " holds no calls");
  return calls;
}

void print_accuracy(const qas::EvaluationReport& report) {
  std::cerr << "[evaluate] train " << report.train_size << ", test " << report.test_size << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic-switching index pipeline for earnings-call Q&A"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  Options o;

  app.add_option("--transcripts", o.transcripts, "Directory of transcript files");
  app.add_option("--prices", o.prices, "Directory of <SYMBOL>.csv daily price files");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--index-csv", o.index_csv, "index.csv to label (default <out>/index.csv)");
  app.add_option("--labeled-csv", o.labeled_csv, "labeled.csv input (default <out>/labeled.csv)");
  app.add_option("--benchmark-csv", o.benchmark_csv, "benchmark.csv input (default <out>/benchmark.csv)");
  app.add_option("--backend", o.backend, "builtin or bridge")->capture_default_str();
  app.add_option("--endpoint", o.endpoint, "Bridge base URL")->capture_default_str();
  app.add_option("--timeout-ms", o.timeout_ms, "Bridge request timeout")->capture_default_str();
  app.add_option("--pooling", o.pooling, "mean or first")->capture_default_str();
  app.add_option("--encoder-seed", o.encoder_seed, "Built-in encoder weight seed")->capture_default_str();
  app.add_option("--weighting", o.weighting, "pair or analyst")->capture_default_str();
  app.add_option("--workers", o.workers, "Parallel workers, 0 = all cores")->capture_default_str();
  app.add_option("--label", o.label, "absolute or relative")->capture_default_str();
  app.add_option("--tau", o.tau, "Relative-change threshold")->capture_default_str();
  app.add_option("--positive-class", o.positive, "up or down")->capture_default_str();
  app.add_option("--split-date", o.split_date, "Train on calls before this date")->capture_default_str();
  app.add_option("--feature-sets", o.feature_sets, "benchmark, benchmark+index, index")->capture_default_str();
  app.add_option("--l1", o.l1, "L1 strength")->capture_default_str();
  app.add_option("--l2", o.l2, "L2 strength")->capture_default_str();
  app.add_option("--learning-rate", o.learning_rate)->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--batch-size", o.batch_size)->capture_default_str();
  app.add_option("--hidden", o.hidden, "Hidden layer widths")->capture_default_str();
  app.add_option("--activation", o.activation, "relu or tanh")->capture_default_str();
  app.add_option("--seed", o.seed, "Training and generator seed")->capture_default_str();
  app.add_option("--companies", o.companies)->capture_default_str();
  app.add_option("--calls-per-company", o.calls_per_company)->capture_default_str();
  app.add_option("--pairs-per-call", o.pairs_per_call)->capture_default_str();
  app.add_option("--slope", o.slope)->capture_default_str();
  app.add_option("--noise-sd", o.noise_sd)->capture_default_str();
  app.add_flag("--monologue", o.monologue, "Add an unpaired manager-only transcript");

  auto* parse = app.add_subcommand("parse", "Parse one transcript and print turns and Q&A pairs as JSON");
  parse->add_option("input", o.input, "Transcript file")->required();
  auto* index = app.add_subcommand("index", "Compute the index for every transcript");
  auto* label = app.add_subcommand("label", "Attach price movements and labels to index records");
  auto* analytics = app.add_subcommand("analytics", "Category summaries, box summaries, yearly trends");
  auto* regress = app.add_subcommand("regress", "Regress relative price change on the index");
  auto* evaluate = app.add_subcommand("evaluate", "Train and test SVM, logistic and NN classifiers");
  auto* study = app.add_subcommand("study", "index, label, analytics, regress and evaluate in one run");
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus with a planted effect");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path out = o.out;
    if (parse->parsed()) {
      const std::string raw = qas::read_file(o.input);
      const auto call = qas::segment_and_pair(qas::parse_transcript(raw, qas::detect_format(raw)));
      std::cout << qas::to_json_with_pairs(call) << "\n";
      return 0;
    }

    const qas::RunConfig cfg = to_run_config(o);

    if (synth->parsed()) {
      qas::SyntheticOptions so;
      so.companies = o.companies;
      so.calls_per_company = o.calls_per_company;
      so.pairs_per_call = o.pairs_per_call;
      so.slope = o.slope;
      so.noise_sd = o.noise_sd;
      so.seed = o.seed;
      so.include_monologue = o.monologue;
      const auto backend = qas::make_backend(cfg.backend);
      const auto corpus = qas::generate_corpus(so, *backend, cfg.weighting);
      qas::write_corpus(corpus, out);
      std::cerr << "[synth] " << corpus.calls.size() << " calls written to " << out.string() << "\n";
      std::cout << "suggested_tau=" << qas::csv::format_double(corpus.suggested_tau) << "\n";
      return 0;
    }

    if (index->parsed() || study->parsed()) {
      if (o.transcripts.empty()) throw qas::Error(qas::ErrorCode::InvalidArgument, "--transcripts is required");
      const auto backend = qas::make_backend(cfg.backend);
      if (index->parsed()) {
        qas::run_index(cfg, *backend);
        return 0;
      }
      if (o.prices.empty()) throw qas::Error(qas::ErrorCode::InvalidArgument, "--prices is required");
      const auto report = qas::run_study(cfg, *backend);
      print_accuracy(report.evaluation);
      std::cout << qas::regressions_to_csv(report.regressions) << qas::accuracy_to_csv(report.evaluation);
      return 0;
    }

    if (label->parsed()) {
      if (o.prices.empty()) throw qas::Error(qas::ErrorCode::InvalidArgument, "--prices is required");
      const std::string path = o.index_csv.empty() ? (out / "index.csv").string() : o.index_csv;
      const auto records = qas::records_from_csv(qas::read_file(path));
      const auto labeled = qas::label_records(records, cfg.price_dir, cfg.label_spec);
      for (const auto& e : labeled.excluded) {
        std::cerr << "[label] excluded " << e.source << ": " << e.message << "\n";
      }
      if (labeled.calls.empty()) throw qas::Error(qas::ErrorCode::NoUsableCalls, "no call could be labeled");
      qas::write_file(out / "labeled.csv", qas::labeled_to_csv(labeled.calls));
      std::cerr << "[label] " << labeled.calls.size() << " calls labeled\n";
      return 0;
    }

    if (analytics->parsed()) {
      qas::write_analytics(qas::run_analytics(load_labeled(o)), out);
      return 0;
    }

    if (regress->parsed()) {
      const auto fits = qas::fit_by_sector(load_labeled(o));
      for (const auto& s : fits.skipped) {
        std::cerr << "[regress] skipped " << (s.sector ? qas::to_string(*s.sector) : "Overall") << ": "
                  << s.reason << "\n";
      }
      const std::string csv = qas::regressions_to_csv(fits);
      qas::write_file(out / "regression.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (evaluate->parsed()) {
      const std::string path = o.benchmark_csv.empty() ? (out / "benchmark.csv").string() : o.benchmark_csv;
      const auto bench = qas::benchmark_from_csv(qas::read_file(path));
      const auto report = qas::evaluate_models(load_labeled(o), bench, cfg);
      print_accuracy(report);
      const std::string csv = qas::accuracy_to_csv(report);
      qas::write_file(out / "accuracy.csv", csv);
      std::cout << csv;
      return 0;
    }
  } catch (const qas::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
