#include "qas/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "qas/csv.hpp"
#include "qas/pipeline.hpp"
#include "qas/transcript.hpp"

namespace qas {

namespace {

using Words = std::vector<std::string_view>;

const std::array<Words, 8> kTopics = {{
    {"revenue", "growth", "sales", "volume", "pricing", "demand", "orders", "backlog", "bookings",
     "customers", "units", "shipments", "mix", "channel", "sellthrough", "momentum"},
    {"margin", "gross", "cost", "inflation", "freight", "labor", "commodity", "input", "savings",
     "productivity", "efficiency", "headwind", "tailwind", "leverage", "expense", "overhead"},
    {"capital", "allocation", "buyback", "dividend", "repurchase", "balance", "sheet", "debt",
     "leverage", "acquisition", "deal", "integration", "synergies", "cash", "flow", "return"},
    {"guidance", "outlook", "forecast", "quarter", "fiscal", "year", "range", "midpoint", "assumption",
     "visibility", "seasonality", "trajectory", "cadence", "target", "estimate", "expectation"},
    {"china", "europe", "international", "currency", "exchange", "tariff", "export", "region",
     "emerging", "market", "asia", "latin", "america", "translation", "geography", "local"},
    {"product", "launch", "pipeline", "innovation", "platform", "software", "cloud", "subscription",
     "services", "device", "upgrade", "adoption", "engagement", "roadmap", "release", "feature"},
    {"inventory", "supply", "chain", "capacity", "plant", "utilization", "shortage", "lead", "time",
     "logistics", "distribution", "warehouse", "sourcing", "constraint", "ramp", "manufacturing"},
    {"regulatory", "approval", "litigation", "compliance", "policy", "government", "legislation",
     "reimbursement", "license", "settlement", "ruling", "agency", "filing", "audit", "review",
     "environmental"},
}};

// Vocabulary an evasive answer drifts into.
const Words kDeflection = {
    "team",      "proud",     "culture",  "journey",  "mission",  "people",     "values",
    "community", "passion",   "excited",  "grateful", "heritage", "brand",      "story",
    "vision",    "partners",  "thank",    "wonderful", "commitment", "dedication", "employees",
    "celebrate", "anniversary", "legacy", "inspiring", "family",   "spirit",     "purpose"};

const std::array<std::string_view, 10> kFirstNames = {
    "Alex", "Jordan", "Morgan", "Taylor", "Casey", "Riley", "Jamie", "Avery", "Quinn", "Drew"};
const std::array<std::string_view, 10> kLastNames = {
    "Hale", "Moreno", "Okafor", "Lindqvist", "Tanaka", "Brennan", "Castillo", "Novak", "Reyes", "Whitfield"};

const std::array<Sector, 6> kSectors = {Sector::InformationTechnology, Sector::ConsumerDiscretionary,
                                        Sector::HealthCare,            Sector::Financials,
                                        Sector::Industrials,           Sector::Energy};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

std::string sentence(Rng& rng, std::size_t words, const Words& main, const Words& other,
                     double other_share, char end) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    const Words& pool = rng.uniform() < other_share ? other : main;
    std::string w(pool[rng.below(pool.size())]);
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  out.push_back(end);
  return out;
}

std::string person(Rng& rng) {
  return std::string(kFirstNames[rng.below(kFirstNames.size())]) + " " +
         std::string(kLastNames[rng.below(kLastNames.size())]);
}

std::string symbol_for(int company) {
  std::string s = "SYN";
  s += static_cast<char>('A' + company / 26 % 26);
  s += static_cast<char>('A' + company % 26);
  return s;
}

// Tuesday to Thursday of the second week of the quarter's middle month.
Date call_date_for(int year, int quarter, int company) {
  const Date first(year, static_cast<unsigned>(quarter * 3 + 2), 8);
  const int shift = (2 + company % 3 - first.weekday() + 7) % 7;
  return first.plus_days(shift);
}

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticOptions& options, const EmbeddingBackend& backend,
                                Weighting weighting) {
  if (options.companies <= 0 || options.calls_per_company <= 0 || options.pairs_per_call <= 0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic corpus sizes must be positive");
  }
  Rng rng(options.seed);
  SyntheticCorpus corpus;

  for (int c = 0; c < options.companies; ++c) {
    const std::string symbol = symbol_for(c);
    const Sector sector = kSectors[static_cast<std::size_t>(c) % kSectors.size()];
    const std::string ceo = person(rng);
    std::string cfo = person(rng);
    while (cfo == ceo) cfo = person(rng);

    std::string prices = "date,high\n";
    double level = 40.0 + 160.0 * rng.uniform();

    // Half of each company's calls are evasive, in shuffled order.
    std::vector<bool> evasive(static_cast<std::size_t>(options.calls_per_company), false);
    for (std::size_t k = 0; k < evasive.size() / 2; ++k) evasive[k] = true;
    for (std::size_t k = evasive.size(); k > 1; --k) {
      const std::size_t j = rng.below(k);
      const bool tmp = evasive[k - 1];
      evasive[k - 1] = evasive[j];
      evasive[j] = tmp;
    }

    for (int k = 0; k < options.calls_per_company; ++k) {
      const int year = options.first_year + k / 4;
      const Date date = call_date_for(year, k % 4, c);
      // Share of each answer spent off the question's topic.
      const double drift = evasive[static_cast<std::size_t>(k)] ? 1.0 - options.drift_band * rng.uniform()
                                                                : options.drift_band * rng.uniform();

      std::string text = "#symbol: " + symbol + "\n#date: " + date.iso() + "\n#sector: " +
                         std::string(to_string(sector)) + "\n#managers: " + ceo + ", " + cfo + "\n";
      text += "Operator: Good day and welcome to the " + symbol + " earnings conference call.\n";
      text += ceo + ": " + sentence(rng, 14, kTopics[0], kTopics[3], 0.5, '.') + " " +
              sentence(rng, 12, kTopics[1], kTopics[5], 0.5, '.') + "\n";
      text += "Operator: We will now begin the question and answer session.\n";
      std::vector<std::string> analysts;
      for (int p = 0; p < options.pairs_per_call; ++p) {
        std::string analyst = person(rng);
        while (analyst == ceo || analyst == cfo ||
               std::find(analysts.begin(), analysts.end(), analyst) != analysts.end()) {
          analyst = person(rng);
        }
        analysts.push_back(analyst);
        const Words& topic = kTopics[rng.below(kTopics.size())];
        const std::string& responder = p % 2 == 0 ? ceo : cfo;
        text += "Operator: Our next question comes from " + analyst + ".\n";
        // The question draws on a handful of topic words; a responsive answer reuses them.
        Words asked;
        for (int w = 0; w < 5; ++w) asked.push_back(topic[rng.below(topic.size())]);
        text += analyst + ": " + sentence(rng, 12, asked, asked, 0.0, '?') + "\n";
        text += responder + ": " + sentence(rng, 16, asked, kDeflection, drift, '.') + " " +
                sentence(rng, 16, asked, kDeflection, drift, '.') + "\n";
      }
      text += "Operator: That concludes today's call.\n";

      const EarningsCall call = segment_and_pair(parse_transcript(text, TranscriptFormat::SpeakerColonPlain));
      const CallIndexRecord record = process_call(call, backend, weighting).record;
      const double r = options.slope * record.index + options.noise_sd * rng.normal();

      const double prev = level;
      const double next = prev * (1.0 + r);
      prices += date.plus_days(-1).iso() + "," + csv::format_double(prev) + "\n";
      prices += date.plus_days(1).iso() + "," + csv::format_double(next) + "\n";
      level = next * (1.0 + 0.05 * (rng.uniform() - 0.5));

      SyntheticCall sc;
      sc.file_name = symbol + "_" + date.iso() + ".txt";
      sc.transcript = std::move(text);
      sc.company_symbol = symbol;
      sc.call_date = date;
      sc.sector = sector;
      sc.planted_index = record.index;
      sc.relative_change = (next - prev) / prev;
      corpus.calls.push_back(std::move(sc));
    }
    corpus.price_files.emplace_back(symbol + ".csv", std::move(prices));
  }

  if (options.include_monologue) {
    std::string text = "#symbol: SYNZZ\n#date: " + Date(options.first_year, 5, 14).iso() +
                       "\n#managers: Pat Monroe\nPat Monroe: " +
                       sentence(rng, 20, kTopics[2], kTopics[2], 0.0, '.') + "\n";
    corpus.extra_transcripts.emplace_back("SYNZZ_monologue.txt", std::move(text));
  }

  std::vector<double> returns;
  for (const auto& c : corpus.calls) returns.push_back(c.relative_change);
  std::sort(returns.begin(), returns.end());
  const std::size_t n = returns.size();
  corpus.suggested_tau = n % 2 == 1 ? returns[n / 2] : 0.5 * (returns[n / 2 - 1] + returns[n / 2]);
  return corpus;
}

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& root) {
  for (const auto& c : corpus.calls) write_file(root / "transcripts" / c.file_name, c.transcript);
  for (const auto& [name, text] : corpus.extra_transcripts) write_file(root / "transcripts" / name, text);
  for (const auto& [name, text] : corpus.price_files) write_file(root / "prices" / name, text);
}

}  // namespace qas
