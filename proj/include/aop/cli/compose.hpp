#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aop/data/corpus.hpp"
#include "aop/experts/model.hpp"

namespace aop::cli {

struct ComposeRow {
  std::vector<std::string> skills;
  std::string bitmap;          // one 0/1 per model skill
  std::vector<double> alpha;   // weights handed to the experts
  std::vector<std::string> response;
};

// Every single skill, then {SQL, d} and {BOOK, d} for each domain skill the
// model knows.
std::vector<std::vector<std::string>> default_skill_sets(const data::SkillLayout& skills);

// Greedy decoding of `context` once per skill set with manual attention.
// LookupError for a skill the model does not have.
std::vector<ComposeRow> compose_demo(const experts::DialogueModel& model, const data::DialogueExample& context,
                                     const std::vector<std::vector<std::string>>& skill_sets, bool normalize,
                                     std::size_t max_len = 40);

void write_compose_table(std::ostream& out, const experts::DialogueModel& model, const std::vector<ComposeRow>& rows);

// A context file holds one corpus-style JSON object; target, skills, types
// and segments may be omitted (history tokens are typed Usr, memory tokens
// "memory").
data::DialogueExample load_context(const std::filesystem::path& path);

}  // namespace aop::cli
