#include "aop/data/memory.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "aop/errors.hpp"

namespace aop::data {

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool matches_act(const MemoryRecord& record, const std::vector<SpeechAct>& acts) {
  for (const auto& act : acts) {
    if (!act.informs()) continue;
    for (const auto& [slot, value] : act.values) {
      const auto field = record.get(slot);
      if (field && lower(*field) != lower(value)) return false;
    }
  }
  return true;
}

}  // namespace

MemoryRecord::MemoryRecord(Fields f) : fields(std::move(f)) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].first.empty()) throw ContractError("empty attribute name in record");
    for (std::size_t j = 0; j < i; ++j) {
      if (fields[j].first == fields[i].first) throw ContractError("duplicate attribute " + fields[i].first);
    }
  }
}

std::optional<std::string> MemoryRecord::get(const std::string& attribute) const {
  for (const auto& [name, value] : fields) {
    if (name == attribute) return value;
  }
  return std::nullopt;
}

std::string SpeechAct::tag() const { return upper(act) + "-" + upper(domain); }

bool SpeechAct::informs() const {
  const auto a = upper(act);
  return a == "INFORM" || a == "RECOMMEND";
}

MemoryContent flatten_records(const std::vector<MemoryRecord>& records) {
  MemoryContent m;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const std::string segment = "rec" + std::to_string(r);
    for (const auto& [attribute, value] : records[r].fields) {
      std::istringstream words(value);
      std::vector<std::string> pair = {attribute};
      std::string w;
      while (words >> w) pair.push_back(w);
      for (const auto& t : pair) {
        m.tokens.push_back(t);
        m.types.push_back(attribute);
        m.segments.push_back(segment);
      }
    }
  }
  return m;
}

MemoryContent populate_memory(const std::vector<MemoryRecord>& results, const std::vector<SpeechAct>& acts) {
  const bool informed = std::any_of(acts.begin(), acts.end(), [](const auto& a) { return a.informs(); });
  if (!informed) {
    if (results.size() > kMaxMemoryRecords) return {{kTableMarkerToken}, {"marker"}, {"rec0"}};
    return flatten_records(results);
  }
  std::vector<MemoryRecord> kept;
  for (const auto& r : results) {
    if (kept.size() == kMaxMemoryRecords) break;
    if (matches_act(r, acts)) kept.push_back(r);
  }
  return flatten_records(kept);
}

MemoryContent booking_memory(const std::optional<MemoryRecord>& booking) {
  if (!booking) return {{kNotAvailableToken}, {"booking"}, {"rec0"}};
  return flatten_records({*booking});
}

std::map<std::string, std::string> changed_slots(const DialogueState& current, const DialogueState& previous,
                                                 const std::string& domain) {
  std::map<std::string, std::string> out;
  auto cur = current.find(domain);
  if (cur == current.end()) return out;
  auto prev = previous.find(domain);
  for (const auto& [slot, value] : cur->second) {
    if (value.empty()) continue;
    if (prev == previous.end()) {
      out[slot] = value;
      continue;
    }
    auto it = prev->second.find(slot);
    if (it == prev->second.end() || it->second != value) out[slot] = value;
  }
  return out;
}

std::optional<Query> candidate_query(const AnnotatedTurn& turn, const DialogueState& previous) {
  for (const auto& act : turn.acts) {
    if (!act.informs()) continue;
    const std::string domain = lower(act.domain);
    const auto cur = turn.state.find(domain);
    if (cur == turn.state.end()) continue;
    if (changed_slots(turn.state, previous, domain).empty()) continue;
    std::map<std::string, std::string> slots;
    for (const auto& [slot, value] : cur->second) {
      if (!value.empty()) slots[slot] = value;
    }
    return make_query(QueryKind::Select, domain, slots);
  }
  return std::nullopt;
}

bool should_issue_api(const AnnotatedTurn& turn, const DialogueState& previous, const std::set<std::string>& issued) {
  const auto query = candidate_query(turn, previous);
  return query && !issued.count(render_query(*query));
}

std::vector<std::string> target_skills(TargetKind kind, const std::string& domain) {
  switch (kind) {
    case TargetKind::Sql:
      return {"SQL", domain_skill(domain)};
    case TargetKind::Book:
      return {"BOOK", domain_skill(domain)};
    case TargetKind::Response:
      return {domain_skill(domain)};
    case TargetKind::ChitChat:
      return {"Persona"};
  }
  throw ContractError("unknown target kind");
}

std::vector<double> build_skill_vector(TargetKind kind, const std::string& domain, const SkillLayout& layout) {
  return layout.encode(target_skills(kind, domain));
}

}  // namespace aop::data
