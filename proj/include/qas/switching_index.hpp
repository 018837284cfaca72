#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qas/common.hpp"
#include "qas/encoder.hpp"
#include "qas/transcript.hpp"

namespace qas {

// Topic-switching score of one question/answer pair: index = 1 - similarity.
struct PairScore {
  std::size_t pair_ordinal = 0;
  std::string analyst_name;
  double similarity = 0.0;
  double index = 0.0;
};

struct CallMeta {
  std::string company_symbol;
  Date call_date;
  Sector sector = Sector::Unknown;
};

// Per-call index: mean of the scored pair indices.
struct CallIndexRecord {
  std::string company_symbol;
  Date call_date;
  Sector sector = Sector::Unknown;
  double index = 0.0;
  std::size_t n_pairs_scored = 0;
  std::size_t n_pairs_skipped = 0;

  friend bool operator==(const CallIndexRecord&, const CallIndexRecord&) = default;
};

enum class Weighting { PerPair, PerAnalyst };

// (a.b)/(|a||b|) clamped to [-1, 1]. Throws ZeroNorm or DimensionMismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Returns nullopt when either vector has zero norm.
std::optional<PairScore> score_pair(const EmbeddingVector& question, const EmbeddingVector& answer,
                                    const QAPair& meta);

struct EmbeddedPair {
  QAPair pair;
  EmbeddingVector question;
  EmbeddingVector answer;
};

// Averages the non-skipped pair indices. PerAnalyst first averages each
// analyst's own pairs. Throws AllPairsSkipped (or EmptyInput for no pairs).
CallIndexRecord score_call(const std::vector<EmbeddedPair>& pairs, const CallMeta& meta,
                           Weighting weighting = Weighting::PerPair);

Weighting parse_weighting(std::string_view name);
std::string_view to_string(Weighting weighting);

// symbol,date,sector,index,n_pairs_scored,n_pairs_skipped
std::string records_to_csv(const std::vector<CallIndexRecord>& records);
std::string records_to_jsonl(const std::vector<CallIndexRecord>& records);
std::vector<CallIndexRecord> records_from_csv(std::string_view text);

}  // namespace qas
