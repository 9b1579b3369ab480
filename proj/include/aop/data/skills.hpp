#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aop::data {

// The 13 skills of the merged corpus: two API skills, ten domains, Persona.
const std::vector<std::string>& full_skill_names();

// Lower-case domain names with a matching domain skill.
const std::vector<std::string>& known_domains();

// "hotel" -> "Hotel". LookupError for an unknown domain.
std::string domain_skill(const std::string& domain);

// Ordered subset of the full skill list; position i is expert i.
class SkillLayout {
 public:
  SkillLayout() = default;
  explicit SkillLayout(std::vector<std::string> names);
  static SkillLayout full() { return SkillLayout(full_skill_names()); }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const;
  std::size_t index(const std::string& name) const;  // LookupError when absent

  // Multi-hot vector for the named skills.
  std::vector<double> encode(const std::vector<std::string>& active) const;
  std::vector<std::string> decode(std::span<const double> bits, double threshold = 0.5) const;

  bool operator==(const SkillLayout& other) const = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace aop::data
