#include "qas/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include <json.hpp>

namespace qas {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Analyst: return "analyst";
    case Role::Manager: return "manager";
    case Role::Operator: return "operator";
    case Role::Unknown: return "unknown";
  }
  return "unknown";
}

Role parse_role(std::string_view name) {
  const std::string key = to_lower(trim(name));
  if (key == "analyst") return Role::Analyst;
  if (key == "manager") return Role::Manager;
  if (key == "operator") return Role::Operator;
  if (key == "unknown") return Role::Unknown;
  throw Error(ErrorCode::MalformedInput, "unknown role '" + std::string(name) + "'");
}

namespace {

// Returns the byte offset of the first invalid UTF-8 sequence, if any.
std::optional<std::size_t> first_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                          (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::nullopt;
}

void require_utf8(std::string_view raw) {
  if (auto bad = first_invalid_utf8(raw)) {
    throw Error(ErrorCode::MalformedInput, "input is not valid UTF-8",
                "byte " + std::to_string(*bad));
  }
}

std::vector<std::string> split_names(std::string_view list) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t end = list.find_first_of(";,", pos);
    if (end == std::string_view::npos) end = list.size();
    std::string name = trim(list.substr(pos, end - pos));
    if (!name.empty()) out.push_back(std::move(name));
    pos = end + 1;
  }
  return out;
}

// A speaker label is 1-6 capitalized words of letters and name punctuation.
bool looks_like_speaker(std::string_view name) {
  if (name.empty() || name.size() > 60) return false;
  int words = 0;
  bool at_word_start = true;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ') {
      at_word_start = true;
      continue;
    }
    if (at_word_start) {
      ++words;
      at_word_start = false;
      if (!(std::isupper(c) || c >= 0x80)) return false;
      continue;
    }
    if (!(std::isalpha(c) || c >= 0x80 || c == '.' || c == '\'' || c == '-')) return false;
  }
  return words >= 1 && words <= 6;
}

bool is_operator_name(std::string_view name) { return to_lower(trim(name)) == "operator"; }

// Fraction of a speaker's sentences that end with '?'.
double question_fraction(const std::vector<const SpeakerTurn*>& turns) {
  std::size_t sentences = 0;
  std::size_t questions = 0;
  for (const SpeakerTurn* turn : turns) {
    bool open = false;
    for (char c : turn->text) {
      if (c == '.' || c == '!' || c == '?') {
        if (open) {
          ++sentences;
          if (c == '?') ++questions;
        }
        open = false;
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        open = true;
      }
    }
    if (open) ++sentences;
  }
  return sentences == 0 ? 0.0 : static_cast<double>(questions) / static_cast<double>(sentences);
}

struct RawTurn {
  std::string speaker;
  std::optional<Role> role;
  std::string text;
};

// Assigns roles per speaker: explicit roles first, then Operator by name, then
// the header's manager and analyst lists, then the first speaker of the Q&A
// section and question-heavy speakers become Analyst; the rest are Unknown.
std::vector<SpeakerTurn> assign_roles(const std::vector<RawTurn>& raw,
                                      const std::vector<std::string>& managers,
                                      const std::vector<std::string>& analysts) {
  std::map<std::string, Role> roles;
  for (const auto& t : raw) {
    if (t.role) roles.emplace(t.speaker, *t.role);
  }
  for (const auto& t : raw) {
    if (roles.count(t.speaker)) continue;
    if (is_operator_name(t.speaker)) roles.emplace(t.speaker, Role::Operator);
  }
  for (const auto& m : managers) roles.emplace(m, Role::Manager);
  for (const auto& a : analysts) roles.emplace(a, Role::Analyst);

  for (const auto& t : raw) {
    auto it = roles.find(t.speaker);
    if (it == roles.end()) {
      roles.emplace(t.speaker, Role::Analyst);
      break;
    }
    if (it->second != Role::Manager && it->second != Role::Operator) break;
  }

  std::map<std::string, std::vector<const SpeakerTurn*>> by_speaker;
  std::vector<SpeakerTurn> turns;
  turns.reserve(raw.size());
  for (const auto& t : raw) {
    turns.push_back(SpeakerTurn{t.speaker, Role::Unknown, t.text, turns.size()});
  }
  for (const auto& t : turns) by_speaker[t.speaker_name].push_back(&t);
  for (const auto& [speaker, speaker_turns] : by_speaker) {
    if (roles.count(speaker)) continue;
    roles.emplace(speaker,
                  question_fraction(speaker_turns) >= 0.5 ? Role::Analyst : Role::Unknown);
  }
  for (auto& t : turns) t.role = roles.at(t.speaker_name);
  return turns;
}

EarningsCall parse_plain(std::string_view raw) {
  EarningsCall call;
  std::optional<std::string> symbol;
  std::optional<Date> date;
  std::vector<std::string> managers;
  std::vector<std::string> analysts;
  std::vector<RawTurn> raw_turns;
  std::vector<std::string> body;

  auto flush = [&] {
    if (raw_turns.empty()) return;
    std::string text;
    for (const auto& line : body) {
      if (!text.empty()) text.push_back('\n');
      text += line;
    }
    raw_turns.back().text = trim(text);
    body.clear();
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = end + 1;
    const std::string where = "line " + std::to_string(line_no);

    if (raw_turns.empty() && !line.empty() && line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::MalformedInput, "header line without ':'", where);
      }
      const std::string key = to_lower(trim(line.substr(1, colon - 1)));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "symbol") {
        symbol = value;
      } else if (key == "date") {
        date = Date::parse_or_throw(value, where);
      } else if (key == "sector") {
        call.sector = parse_sector(value);
      } else if (key == "managers") {
        managers = split_names(value);
      } else if (key == "analysts") {
        analysts = split_names(value);
      }
      continue;
    }

    const auto colon = line.find(':');
    if (colon != std::string_view::npos && colon > 0 && line.front() != ' ' &&
        line.front() != '\t') {
      std::string_view name = line.substr(0, colon);
      while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
      if (looks_like_speaker(name)) {
        flush();
        raw_turns.push_back(RawTurn{std::string(name), std::nullopt, {}});
        std::string first = trim(line.substr(colon + 1));
        if (!first.empty()) body.push_back(std::move(first));
        continue;
      }
    }
    if (!raw_turns.empty()) body.emplace_back(line);
  }
  flush();

  std::erase_if(raw_turns, [](const RawTurn& t) { return t.text.empty(); });
  if (raw_turns.empty()) {
    throw Error(ErrorCode::MalformedInput, "no speaker turn found",
                "line " + std::to_string(std::max<std::size_t>(line_no, 1)));
  }
  if (!symbol || symbol->empty()) {
    throw Error(ErrorCode::MalformedInput, "missing required header field 'symbol'", "line 1");
  }
  if (!date) {
    throw Error(ErrorCode::MalformedInput, "missing required header field 'date'", "line 1");
  }
  call.company_symbol = *symbol;
  call.call_date = *date;
  call.turns = assign_roles(raw_turns, managers, analysts);
  return call;
}

EarningsCall parse_json(std::string_view raw) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedInput, "invalid JSON", "byte " + std::to_string(e.byte));
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedInput, "top level must be an object", "byte 0");
  auto field = [&](const char* key) -> std::string {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
      throw Error(ErrorCode::MalformedInput,
                  std::string("missing required string field '") + key + "'", "byte 0");
    }
    return it->get<std::string>();
  };

  EarningsCall call;
  call.company_symbol = field("symbol");
  if (call.company_symbol.empty()) {
    throw Error(ErrorCode::MalformedInput, "empty 'symbol'", "byte 0");
  }
  call.call_date = Date::parse_or_throw(field("date"), "field 'date'");
  if (auto it = doc.find("sector"); it != doc.end() && it->is_string()) {
    call.sector = parse_sector(it->get<std::string>());
  }
  std::vector<std::string> managers;
  std::vector<std::string> analysts;
  if (auto it = doc.find("managers"); it != doc.end() && it->is_array()) {
    for (const auto& m : *it) managers.push_back(m.get<std::string>());
  }
  if (auto it = doc.find("analysts"); it != doc.end() && it->is_array()) {
    for (const auto& a : *it) analysts.push_back(a.get<std::string>());
  }

  auto turns_it = doc.find("turns");
  if (turns_it == doc.end() || !turns_it->is_array()) {
    throw Error(ErrorCode::MalformedInput, "missing 'turns' array", "byte 0");
  }
  std::vector<RawTurn> raw_turns;
  std::size_t index = 0;
  for (const auto& t : *turns_it) {
    const std::string where = "turns[" + std::to_string(index++) + "]";
    if (!t.is_object() || !t.contains("speaker") || !t.contains("text") ||
        !t["speaker"].is_string() || !t["text"].is_string()) {
      throw Error(ErrorCode::MalformedInput, "turn needs string 'speaker' and 'text'", where);
    }
    RawTurn rt{trim(t["speaker"].get<std::string>()), std::nullopt,
               trim(t["text"].get<std::string>())};
    if (auto r = t.find("role"); r != t.end() && r->is_string()) rt.role = parse_role(r->get<std::string>());
    if (rt.text.empty()) continue;
    raw_turns.push_back(std::move(rt));
  }
  if (raw_turns.empty()) throw Error(ErrorCode::MalformedInput, "no speaker turn found", "turns");
  call.turns = assign_roles(raw_turns, managers, analysts);
  return call;
}

}  // namespace

TranscriptFormat detect_format(std::string_view raw) {
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    return c == '{' ? TranscriptFormat::JsonTurns : TranscriptFormat::SpeakerColonPlain;
  }
  return TranscriptFormat::SpeakerColonPlain;
}

EarningsCall parse_transcript(std::string_view raw, TranscriptFormat format) {
  require_utf8(raw);
  if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
  return format == TranscriptFormat::JsonTurns ? parse_json(raw) : parse_plain(raw);
}

EarningsCall segment_and_pair(EarningsCall call, const Roster& roster) {
  if (call.turns.empty()) throw Error(ErrorCode::NoPairsFound, "call has no turns");
  if (!roster.empty()) {
    for (auto& turn : call.turns) {
      if (auto it = roster.find(turn.speaker_name); it != roster.end()) turn.role = it->second;
    }
  }

  call.qa_pairs.clear();
  const auto& turns = call.turns;
  auto join = [&](std::size_t from, std::size_t to) {
    std::string text;
    for (std::size_t k = from; k < to; ++k) {
      if (k > from) text.push_back('\n');
      text += turns[k].text;
    }
    return text;
  };

  std::size_t i = 0;
  while (i < turns.size()) {
    if (turns[i].role != Role::Analyst) {
      ++i;
      continue;
    }
    const std::string& analyst = turns[i].speaker_name;
    std::size_t q_end = i;
    while (q_end < turns.size() && turns[q_end].role == Role::Analyst &&
           turns[q_end].speaker_name == analyst) {
      ++q_end;
    }
    std::size_t a_end = q_end;
    while (a_end < turns.size() && turns[a_end].role == Role::Manager) ++a_end;
    if (a_end > q_end) {
      call.qa_pairs.push_back(
          QAPair{analyst, join(i, q_end), join(q_end, a_end), call.qa_pairs.size()});
    }
    i = a_end;
  }
  if (call.qa_pairs.empty()) {
    throw Error(ErrorCode::NoPairsFound,
                "no analyst turn followed by a manager answer in " + call.company_symbol + " " +
                    call.call_date.iso());
  }
  return call;
}

namespace {

nlohmann::ordered_json header_json(const EarningsCall& call) {
  nlohmann::ordered_json doc;
  doc["symbol"] = call.company_symbol;
  doc["date"] = call.call_date.iso();
  doc["sector"] = std::string(to_string(call.sector));
  auto turns = nlohmann::ordered_json::array();
  for (const auto& t : call.turns) {
    nlohmann::ordered_json jt;
    jt["speaker"] = t.speaker_name;
    jt["role"] = std::string(to_string(t.role));
    jt["text"] = t.text;
    turns.push_back(std::move(jt));
  }
  doc["turns"] = std::move(turns);
  return doc;
}

}  // namespace

std::string to_json_turns(const EarningsCall& call) { return header_json(call).dump(2); }

std::string to_json_with_pairs(const EarningsCall& call) {
  auto doc = header_json(call);
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& p : call.qa_pairs) {
    nlohmann::ordered_json jp;
    jp["pair_ordinal"] = p.pair_ordinal;
    jp["analyst"] = p.analyst_name;
    jp["question"] = p.question_text;
    jp["answer"] = p.answer_text;
    pairs.push_back(std::move(jp));
  }
  doc["qa_pairs"] = std::move(pairs);
  return doc.dump(2);
}

}  // namespace qas
