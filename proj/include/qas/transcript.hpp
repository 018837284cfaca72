#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qas/common.hpp"

namespace qas {

enum class Role { Analyst, Manager, Operator, Unknown };

std::string_view to_string(Role role);
// Case-insensitive; throws MalformedInput on anything else.
Role parse_role(std::string_view name);

struct SpeakerTurn {
  std::string speaker_name;
  Role role = Role::Unknown;
  std::string text;  // trimmed, never empty
  std::size_t ordinal = 0;

  friend bool operator==(const SpeakerTurn&, const SpeakerTurn&) = default;
};

// One analyst's question block and the management answer block that follows it.
struct QAPair {
  std::string analyst_name;
  std::string question_text;
  std::string answer_text;
  std::size_t pair_ordinal = 0;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct EarningsCall {
  std::string company_symbol;
  Date call_date;
  Sector sector = Sector::Unknown;
  std::vector<SpeakerTurn> turns;
  std::vector<QAPair> qa_pairs;

  friend bool operator==(const EarningsCall&, const EarningsCall&) = default;
};

enum class TranscriptFormat { SpeakerColonPlain, JsonTurns };

using Roster = std::map<std::string, Role>;

// Parses a transcript into metadata and ordered speaker turns. qa_pairs is left
// empty. Throws Error(MalformedInput) with a line number or byte offset.
//
// SpeakerColonPlain: optional `#key: value` header lines (symbol, date, sector,
// managers, analysts) followed by turns that each start with `Name:` at column 0.
// JsonTurns: {"symbol", "date", "sector", "turns": [{"speaker", "role"?, "text"}]}.
EarningsCall parse_transcript(std::string_view raw, TranscriptFormat format);

// Picks the format from content: a leading '{' selects JsonTurns.
TranscriptFormat detect_format(std::string_view raw);

// Emits one QAPair per maximal same-analyst block of Analyst turns that is
// immediately followed by a block of Manager turns. Operator and Unknown turns
// break blocks. A non-empty roster overrides the roles stored on the turns.
// Throws Error(NoPairsFound) when no analyst-then-manager adjacency exists.
EarningsCall segment_and_pair(EarningsCall call, const Roster& roster = {});

// JsonTurns serialization; parse_transcript(to_json_turns(c), JsonTurns)
// reproduces c apart from qa_pairs.
std::string to_json_turns(const EarningsCall& call);

// Full JSON view including qa_pairs, for the `parse` subcommand.
std::string to_json_with_pairs(const EarningsCall& call);

}  // namespace qas
