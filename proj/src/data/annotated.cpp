#include "aop/data/annotated.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "aop/data/skills.hpp"
#include "aop/errors.hpp"
#include "json.hpp"

namespace aop::data {

namespace {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

MemoryRecord record_from(const json& j) {
  Fields f;
  for (const auto& pair : j) f.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  return MemoryRecord(std::move(f));
}

AnnotatedTurn turn_from(const json& j) {
  AnnotatedTurn t;
  const auto speaker = j.at("speaker").get<std::string>();
  if (speaker == "usr") t.speaker = Speaker::User;
  else if (speaker == "sys") t.speaker = Speaker::System;
  else throw ParseError("speaker must be usr or sys, got " + speaker);
  t.tokens = tokenize(j.at("text").get<std::string>());
  if (j.contains("state")) t.state = j.at("state").get<DialogueState>();
  if (j.contains("acts")) {
    for (const auto& a : j.at("acts")) {
      SpeechAct act{a.at("act").get<std::string>(), a.at("domain").get<std::string>(), {}};
      if (a.contains("values")) {
        for (const auto& v : a.at("values")) act.values.emplace_back(v.at(0).get<std::string>(), v.at(1).get<std::string>());
      }
      t.acts.push_back(std::move(act));
    }
  }
  return t;
}

AnnotatedDialogue dialogue_from(const json& j) {
  AnnotatedDialogue d;
  d.id = j.value("id", std::string());
  const auto& turns = j.at("turns");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    auto turn = turn_from(turns[i]);
    const bool user_expected = i % 2 == 0;
    if ((turn.speaker == Speaker::User) != user_expected) throw ParseError("turns must alternate starting with usr");
    if (user_expected) {
      d.user_turns.push_back(std::move(turn));
      continue;
    }
    AnnotatedSystemTurn s{std::move(turn), {}, std::nullopt, std::nullopt};
    if (turns[i].contains("results")) {
      for (const auto& r : turns[i].at("results")) s.results.push_back(record_from(r));
    }
    if (turns[i].contains("book")) {
      s.booking_slots = turns[i].at("book").get<std::map<std::string, std::string>>();
      const auto& b = turns[i].value("booking", json(nullptr));
      if (!b.is_null()) s.booking = record_from(b);
    }
    d.system_turns.push_back(std::move(s));
  }
  return d;
}

struct History {
  std::vector<std::string> tokens, types, segments;
  std::size_t turns = 0;

  void add(Speaker speaker, const std::vector<std::string>& words) {
    const std::string segment = "turn" + std::to_string(turns++ % 2);
    for (const auto& w : words) {
      tokens.push_back(w);
      types.push_back(speaker == Speaker::User ? "Usr" : "Sys");
      segments.push_back(segment);
    }
  }
};

DialogueExample make_example(const std::string& id, const History& h, const MemoryContent& m,
                             std::vector<std::string> target, std::vector<std::string> skills) {
  DialogueExample e;
  e.id = id;
  e.history = h.tokens;
  e.memory = m.tokens;
  e.target = std::move(target);
  e.skills = std::move(skills);
  e.types = h.types;
  e.types.insert(e.types.end(), m.types.begin(), m.types.end());
  e.segments = h.segments;
  e.segments.insert(e.segments.end(), m.segments.begin(), m.segments.end());
  return e;
}

std::optional<std::string> act_domain(const AnnotatedTurn& turn) {
  for (const auto& a : turn.acts) {
    try {
      domain_skill(a.domain);
      return a.domain;
    } catch (const LookupError&) {
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<AnnotatedDialogue> load_annotated_dialogues(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dialogues " + path.string());
  std::vector<AnnotatedDialogue> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(dialogue_from(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    } catch (const Error& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    }
  }
  return out;
}

std::vector<DialogueExample> dialogue_examples(const AnnotatedDialogue& dialogue) {
  std::vector<DialogueExample> out;
  History history;
  MemoryContent memory;
  DialogueState previous;
  std::set<std::string> issued;
  for (std::size_t i = 0; i < dialogue.system_turns.size(); ++i) {
    const auto& user = dialogue.user_turns.at(i);
    const auto& sys = dialogue.system_turns[i];
    const std::string prefix = dialogue.id + "-" + std::to_string(i);
    history.add(Speaker::User, user.tokens);

    if (should_issue_api(sys.turn, previous, issued)) {
      const auto query = *candidate_query(sys.turn, previous);
      issued.insert(render_query(query));
      out.push_back(make_example(prefix + "-sql", history, memory, query_tokens(query),
                                 target_skills(TargetKind::Sql, query.domain)));
      memory = populate_memory(sys.results, sys.turn.acts);
    }
    const auto domain = act_domain(sys.turn);
    if (sys.booking_slots && domain) {
      out.push_back(make_example(prefix + "-book", history, memory, synthesize_book_query(*domain, *sys.booking_slots),
                                 target_skills(TargetKind::Book, *domain)));
      memory = booking_memory(sys.booking);
    }
    if (domain && !sys.turn.tokens.empty()) {
      out.push_back(make_example(prefix + "-response", history, memory, sys.turn.tokens,
                                 target_skills(TargetKind::Response, *domain)));
    }
    history.add(Speaker::System, sys.turn.tokens);
    previous = sys.turn.state;
  }
  return out;
}

}  // namespace aop::data
