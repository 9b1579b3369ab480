#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aop/data/corpus.hpp"
#include "aop/data/memory.hpp"

namespace aop::data {

// A system turn with the database side of the annotation: rows returned for
// the state at this turn and, when a booking was attempted, its slots and
// outcome.
struct AnnotatedSystemTurn {
  AnnotatedTurn turn;
  std::vector<MemoryRecord> results;
  std::optional<std::map<std::string, std::string>> booking_slots;
  std::optional<MemoryRecord> booking;  // absent on failure
};

struct AnnotatedDialogue {
  std::string id;
  std::vector<AnnotatedTurn> user_turns;  // user_turns[i] precedes system_turns[i]
  std::vector<AnnotatedSystemTurn> system_turns;
};

// One dialogue per line:
//   {"id": ..., "turns": [{"speaker": "usr"|"sys", "text": "...",
//     "state": {domain: {slot: value}}, "acts": [{"act", "domain", "values": [[slot, value]]}],
//     "results": [[[attr, value], ...], ...], "book": {slot: value}, "booking": [[attr, value], ...] | null}]}
// Turns must alternate starting with the user. ParseError carries the line number.
std::vector<AnnotatedDialogue> load_annotated_dialogues(const std::filesystem::path& path);

// Training instances of one dialogue. Each system turn yields, in order, a
// SELECT example when should_issue_api fires, a BOOK example when a booking
// was attempted, and the plain response labeled with its act domain. The
// memory seen by later turns is the output of the last API call.
std::vector<DialogueExample> dialogue_examples(const AnnotatedDialogue& dialogue);

}  // namespace aop::data
