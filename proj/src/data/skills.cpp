#include "aop/data/skills.hpp"

#include <algorithm>
#include <cctype>

#include "aop/errors.hpp"

namespace aop::data {

const std::vector<std::string>& full_skill_names() {
  static const std::vector<std::string> names = {"SQL",        "BOOK",  "Taxi",    "Police",   "Restaurant",
                                                 "Hospital",   "Hotel", "Attraction", "Train", "Weather",
                                                 "Schedule",   "Navigate", "Persona"};
  return names;
}

const std::vector<std::string>& known_domains() {
  static const std::vector<std::string> domains = {"taxi",       "police", "restaurant", "hospital", "hotel",
                                                   "attraction", "train",  "weather",    "schedule", "navigate"};
  return domains;
}

std::string domain_skill(const std::string& domain) {
  std::string lower = domain;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (std::find(known_domains().begin(), known_domains().end(), lower) == known_domains().end()) {
    throw LookupError("unknown domain: " + domain);
  }
  lower[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(lower[0])));
  return lower;
}

SkillLayout::SkillLayout(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ContractError("a skill layout needs at least one skill");
  const auto& known = full_skill_names();
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (std::find(known.begin(), known.end(), names_[i]) == known.end()) {
      throw LookupError("unknown skill: " + names_[i]);
    }
    if (std::find(names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(i), names_[i]) !=
        names_.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw ContractError("duplicate skill: " + names_[i]);
    }
  }
}

bool SkillLayout::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t SkillLayout::index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw LookupError("skill " + name + " is not part of this model");
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<double> SkillLayout::encode(const std::vector<std::string>& active) const {
  std::vector<double> bits(names_.size(), 0.0);
  for (const auto& name : active) bits[index(name)] = 1.0;
  return bits;
}

std::vector<std::string> SkillLayout::decode(std::span<const double> bits, double threshold) const {
  if (bits.size() != names_.size()) throw DimensionError("skill vector length differs from layout");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > threshold) out.push_back(names_[i]);
  }
  return out;
}

}  // namespace aop::data
