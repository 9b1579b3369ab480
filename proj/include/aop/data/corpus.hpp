#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aop/data/skills.hpp"

namespace aop::data {

// One training instance. `types` and `segments` tag every token of
// X = [history; memory].
struct DialogueExample {
  std::string id;
  std::vector<std::string> history;
  std::vector<std::string> memory;
  std::vector<std::string> target;
  std::vector<std::string> skills;
  std::vector<std::string> types;
  std::vector<std::string> segments;

  std::size_t input_length() const { return history.size() + memory.size(); }
  // Throws ContractError / LookupError when the invariants do not hold.
  void validate(const SkillLayout& layout) const;

  bool operator==(const DialogueExample&) const = default;
};

struct Dataset {
  std::vector<DialogueExample> train;
  std::vector<DialogueExample> valid;
  std::vector<DialogueExample> test;
};

// JSON Lines; each line {id?, history, memory, target, skills, types, segments}.
// Skills are validated against `layout`; errors carry the 1-based line number.
std::vector<DialogueExample> load_corpus(const std::filesystem::path& path,
                                         const SkillLayout& layout = SkillLayout::full());
void save_corpus(const std::filesystem::path& path, const std::vector<DialogueExample>& examples);

std::string example_to_json(const DialogueExample& example);
DialogueExample example_from_json(const std::string& line);

// Skills used by any example, ordered like the full layout.
SkillLayout corpus_skills(const std::vector<DialogueExample>& examples);

// Entity strings (possibly multi-token, space separated) and their domain.
class EntityLexicon {
 public:
  void add(const std::string& entity, const std::string& domain);
  bool empty() const { return domain_of_.empty(); }
  std::size_t size() const { return domain_of_.size(); }
  const std::map<std::string, std::string>& entries() const { return domain_of_; }
  std::size_t longest() const { return longest_; }

  void save(const std::filesystem::path& path) const;
  static EntityLexicon load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> domain_of_;
  std::size_t longest_ = 0;
};

}  // namespace aop::data
