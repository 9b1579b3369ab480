#include "aop/data/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "aop/errors.hpp"
#include "json.hpp"

namespace aop::data {

using nlohmann::json;

void DialogueExample::validate(const SkillLayout& layout) const {
  if (history.empty() && memory.empty()) throw ContractError("example " + id + " has an empty input");
  if (target.empty()) throw ContractError("example " + id + " has an empty target");
  if (types.size() != input_length() || segments.size() != input_length()) {
    throw ContractError("example " + id + ": types/segments must tag every history and memory token");
  }
  if (skills.empty()) throw ContractError("example " + id + " has no skills");
  for (const auto& s : skills) layout.index(s);
}

std::string example_to_json(const DialogueExample& e) {
  json j;
  if (!e.id.empty()) j["id"] = e.id;
  j["history"] = e.history;
  j["memory"] = e.memory;
  j["target"] = e.target;
  j["skills"] = e.skills;
  j["types"] = e.types;
  j["segments"] = e.segments;
  return j.dump();
}

DialogueExample example_from_json(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw ParseError("corpus line is not a JSON object");
  DialogueExample e;
  auto list = [&](const char* key, std::vector<std::string>& out, bool required) {
    if (!j.contains(key)) {
      if (required) throw ParseError(std::string("missing field '") + key + "'");
      return;
    }
    out = j.at(key).get<std::vector<std::string>>();
  };
  if (j.contains("id")) e.id = j.at("id").get<std::string>();
  list("history", e.history, true);
  list("memory", e.memory, false);
  list("target", e.target, true);
  list("skills", e.skills, true);
  list("types", e.types, true);
  list("segments", e.segments, true);
  return e;
}

std::vector<DialogueExample> load_corpus(const std::filesystem::path& path, const SkillLayout& layout) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  std::vector<DialogueExample> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto e = example_from_json(line);
      e.validate(layout);
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(path.string() + ": " + ex.what(), number);
    } catch (const Error& ex) {
      throw ParseError(path.string() + ": " + ex.what(), number);
    }
  }
  return out;
}

void save_corpus(const std::filesystem::path& path, const std::vector<DialogueExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write corpus " + path.string());
  for (const auto& e : examples) out << example_to_json(e) << '\n';
  if (!out) throw Error("failed writing corpus " + path.string());
}

SkillLayout corpus_skills(const std::vector<DialogueExample>& examples) {
  std::vector<std::string> used;
  for (const auto& name : full_skill_names()) {
    const bool present = std::any_of(examples.begin(), examples.end(), [&](const auto& e) {
      return std::find(e.skills.begin(), e.skills.end(), name) != e.skills.end();
    });
    if (present) used.push_back(name);
  }
  return SkillLayout(used);
}

void EntityLexicon::add(const std::string& entity, const std::string& domain) {
  if (entity.empty()) throw ContractError("empty entity");
  domain_of_[entity] = domain;
  std::istringstream words(entity);
  std::size_t n = 0;
  std::string w;
  while (words >> w) ++n;
  longest_ = std::max(longest_, n);
}

void EntityLexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write lexicon " + path.string());
  out << json(domain_of_).dump(1) << '\n';
}

EntityLexicon EntityLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  EntityLexicon lex;
  try {
    const auto entries = json::parse(in).get<std::map<std::string, std::string>>();
    for (const auto& [entity, domain] : entries) lex.add(entity, domain);
  } catch (const json::exception& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
  return lex;
}

}  // namespace aop::data
