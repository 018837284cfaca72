#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qas/common.hpp"
#include "qas/embedding.hpp"
#include "qas/switching_index.hpp"

namespace qas {

// Seeded corpus where each call's return is slope * index + N(0, noise_sd).
struct SyntheticOptions {
  int companies = 20;
  int calls_per_company = 12;
  int pairs_per_call = 4;
  int first_year = 2014;  // quarterly calls from Q1 of this year
  double slope = -0.02;
  double noise_sd = 0.001;
  std::uint64_t seed = 7;
  // Off-topic share of answers is drawn from [0, band] or [1 - band, 1].
  double drift_band = 0.1;
  // Adds one manager-only transcript that pairs nothing.
  bool include_monologue = false;
};

struct SyntheticCall {
  std::string file_name;
  std::string transcript;
  std::string company_symbol;
  Date call_date;
  Sector sector = Sector::Unknown;
  double planted_index = 0.0;  // computed through parse, pair, embed, score
  double relative_change = 0.0;
};

struct SyntheticCorpus {
  std::vector<SyntheticCall> calls;
  std::vector<std::pair<std::string, std::string>> price_files;  // (SYMBOL.csv, csv text)
  std::vector<std::pair<std::string, std::string>> extra_transcripts;
  double suggested_tau = 0.0;  // median planted return, balances the classes
};

SyntheticCorpus generate_corpus(const SyntheticOptions& options, const EmbeddingBackend& backend,
                                Weighting weighting = Weighting::PerPair);

// Writes transcripts to `root/transcripts` and prices to `root/prices`.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& root);

}  // namespace qas
