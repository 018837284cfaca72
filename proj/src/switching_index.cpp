#include "qas/switching_index.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "qas/csv.hpp"

namespace qas {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vectors have different dimensions");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroNorm, "zero-norm embedding");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::optional<PairScore> score_pair(const EmbeddingVector& question, const EmbeddingVector& answer,
                                    const QAPair& meta) {
  if (question.size() != answer.size()) {
    throw Error(ErrorCode::DimensionMismatch, "question and answer vectors differ in dimension");
  }
  if (question.norm() == 0.0 || answer.norm() == 0.0) return std::nullopt;
  const double similarity = cosine_similarity(question, answer);
  return PairScore{meta.pair_ordinal, meta.analyst_name, similarity, 1.0 - similarity};
}

CallIndexRecord score_call(const std::vector<EmbeddedPair>& pairs, const CallMeta& meta,
                           Weighting weighting) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "call has no pairs to score");
  std::vector<PairScore> scores;
  std::size_t skipped = 0;
  for (const auto& p : pairs) {
    if (auto s = score_pair(p.question, p.answer, p.pair)) {
      scores.push_back(*s);
    } else {
      ++skipped;
    }
  }
  if (scores.empty()) {
    throw Error(ErrorCode::AllPairsSkipped,
                "every pair had a zero-norm embedding in " + meta.company_symbol + " " +
                    meta.call_date.iso());
  }
  // Sum in pair-ordinal order so the result does not depend on input order.
  std::sort(scores.begin(), scores.end(), [](const PairScore& a, const PairScore& b) {
    return a.pair_ordinal != b.pair_ordinal ? a.pair_ordinal < b.pair_ordinal
                                            : a.index < b.index;
  });

  double index = 0.0;
  if (weighting == Weighting::PerPair) {
    for (const auto& s : scores) index += s.index;
    index /= static_cast<double>(scores.size());
  } else {
    std::map<std::string, std::pair<double, std::size_t>> per_analyst;
    for (const auto& s : scores) {
      auto& [sum, n] = per_analyst[s.analyst_name];
      sum += s.index;
      ++n;
    }
    for (const auto& [name, acc] : per_analyst) index += acc.first / static_cast<double>(acc.second);
    index /= static_cast<double>(per_analyst.size());
  }
  return CallIndexRecord{meta.company_symbol, meta.call_date, meta.sector, index, scores.size(),
                         skipped};
}

Weighting parse_weighting(std::string_view name) {
  const std::string key = to_lower(name);
  if (key == "per-pair" || key == "per_pair" || key == "pair") return Weighting::PerPair;
  if (key == "per-analyst" || key == "per_analyst" || key == "analyst") return Weighting::PerAnalyst;
  throw Error(ErrorCode::InvalidArgument, "unknown weighting '" + std::string(name) + "'");
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::PerPair ? "per-pair" : "per-analyst";
}

std::string records_to_csv(const std::vector<CallIndexRecord>& records) {
  std::string out = "symbol,date,sector,index,n_pairs_scored,n_pairs_skipped\n";
  for (const auto& r : records) {
    out += csv::escape(r.company_symbol) + "," + r.call_date.iso() + "," +
           csv::escape(to_string(r.sector)) + "," + csv::format_double(r.index) + "," +
           std::to_string(r.n_pairs_scored) + "," + std::to_string(r.n_pairs_skipped) + "\n";
  }
  return out;
}

std::string records_to_jsonl(const std::vector<CallIndexRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["symbol"] = r.company_symbol;
    j["date"] = r.call_date.iso();
    j["sector"] = std::string(to_string(r.sector));
    j["index"] = r.index;
    j["n_pairs_scored"] = r.n_pairs_scored;
    j["n_pairs_skipped"] = r.n_pairs_skipped;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<CallIndexRecord> records_from_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const int c_symbol = table.column("symbol");
  const int c_date = table.column("date");
  const int c_sector = table.column("sector");
  const int c_index = table.column("index");
  const int c_scored = table.column("n_pairs_scored");
  const int c_skipped = table.column("n_pairs_skipped");
  if (c_symbol < 0 || c_date < 0 || c_index < 0) {
    throw Error(ErrorCode::MalformedInput, "index CSV needs symbol,date,index columns", "line 1");
  }
  std::vector<CallIndexRecord> records;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = "line " + std::to_string(table.line_numbers[i]);
    CallIndexRecord r;
    r.company_symbol = row[static_cast<std::size_t>(c_symbol)];
    r.call_date = Date::parse_or_throw(row[static_cast<std::size_t>(c_date)], where);
    if (c_sector >= 0) r.sector = parse_sector(row[static_cast<std::size_t>(c_sector)]);
    r.index = csv::to_double(row[static_cast<std::size_t>(c_index)], where);
    r.n_pairs_scored = c_scored >= 0 ? csv::to_count(row[static_cast<std::size_t>(c_scored)], where) : 1;
    r.n_pairs_skipped = c_skipped >= 0 ? csv::to_count(row[static_cast<std::size_t>(c_skipped)], where) : 0;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace qas
