#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aop/data/query.hpp"
#include "aop/data/skills.hpp"

namespace aop::data {

using Fields = std::vector<std::pair<std::string, std::string>>;

// One database row: ordered (attribute, value) pairs with unique attributes.
struct MemoryRecord {
  Fields fields;

  MemoryRecord() = default;
  explicit MemoryRecord(Fields f);
  std::optional<std::string> get(const std::string& attribute) const;
};

// ACT-DOMAIN speech act with its (slot, value) arguments.
struct SpeechAct {
  std::string act;     // INFORM, RECOMMEND, REQUEST, BOOK, ...
  std::string domain;  // lower case
  std::vector<std::pair<std::string, std::string>> values;

  std::string tag() const;  // "INFORM-HOTEL"
  bool informs() const;     // INFORM or RECOMMEND
};

// domain -> slot -> value
using DialogueState = std::map<std::string, std::map<std::string, std::string>>;

enum class Speaker { User, System };

struct AnnotatedTurn {
  Speaker speaker = Speaker::System;
  std::vector<std::string> tokens;
  DialogueState state;
  std::vector<SpeechAct> acts;
};

// Memory tokens with per-token type tags (attribute names) and segment tags
// (record index).
struct MemoryContent {
  std::vector<std::string> tokens;
  std::vector<std::string> types;
  std::vector<std::string> segments;
};

inline constexpr const char* kTableMarkerToken = "<TM>";
inline constexpr const char* kNotAvailableToken = "Not_Available";
inline constexpr std::size_t kMaxMemoryRecords = 5;

// Each record becomes `attr1 val1 attr2 val2 ...`; both tokens of a pair carry
// the attribute as type and "rec<i>" as segment.
MemoryContent flatten_records(const std::vector<MemoryRecord>& records);

// Memory after a SELECT call:
//   no INFORM/RECOMMEND act, more than 5 rows  -> <TM>
//   no INFORM/RECOMMEND act, at most 5 rows    -> all rows
//   INFORM/RECOMMEND act                       -> rows matching the act values, at most 5
MemoryContent populate_memory(const std::vector<MemoryRecord>& results, const std::vector<SpeechAct>& acts);

// Memory after a BOOK call: the booking record or Not_Available.
MemoryContent booking_memory(const std::optional<MemoryRecord>& booking);

// Slots of `domain` whose value differs from the previous state.
std::map<std::string, std::string> changed_slots(const DialogueState& current, const DialogueState& previous,
                                                 const std::string& domain);

// SELECT query over the changed slots of the first informing act's domain.
std::optional<Query> candidate_query(const AnnotatedTurn& turn, const DialogueState& previous);

// True iff the turn has an INFORM/RECOMMEND act, the state changed since the
// previous turn and the resulting query was never issued before.
bool should_issue_api(const AnnotatedTurn& turn, const DialogueState& previous, const std::set<std::string>& issued);

enum class TargetKind { Sql, Book, Response, ChitChat };

// Skill names active for a target: API skill plus domain for queries, the
// domain for plain responses, Persona for chit-chat.
std::vector<std::string> target_skills(TargetKind kind, const std::string& domain);
std::vector<double> build_skill_vector(TargetKind kind, const std::string& domain, const SkillLayout& layout);

}  // namespace aop::data
