#include "aop/cli/compose.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "aop/errors.hpp"
#include "json.hpp"

namespace aop::cli {

std::vector<std::vector<std::string>> default_skill_sets(const data::SkillLayout& skills) {
  std::vector<std::vector<std::string>> sets;
  for (const auto& s : skills.names()) sets.push_back({s});
  for (const std::string api : {"SQL", "BOOK"}) {
    if (!skills.contains(api)) continue;
    for (const auto& s : skills.names()) {
      if (s == "SQL" || s == "BOOK" || s == "Persona") continue;
      sets.push_back({api, s});
    }
  }
  return sets;
}

std::vector<ComposeRow> compose_demo(const experts::DialogueModel& model, const data::DialogueExample& context,
                                     const std::vector<std::vector<std::string>>& skill_sets, bool normalize,
                                     std::size_t max_len) {
  if (!experts::has_expert_bank(model.variant())) {
    throw ContractError("composition needs a model with an expert bank, not " + experts::variant_name(model.variant()));
  }
  std::vector<ComposeRow> rows;
  for (const auto& set : skill_sets) {
    const auto alpha = experts::manual_attention(model.skills().names(), set, normalize);
    ComposeRow row;
    row.skills = set;
    row.alpha.assign(alpha.data().begin(), alpha.data().end());
    for (double a : row.alpha) row.bitmap += a > 0 ? '1' : '0';
    row.response = model.generate(context, max_len, &alpha);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_compose_table(std::ostream& out, const experts::DialogueModel& model, const std::vector<ComposeRow>& rows) {
  std::size_t width = 6;
  std::vector<std::string> labels;
  for (const auto& r : rows) {
    std::string label;
    for (const auto& s : r.skills) label += (label.empty() ? "" : "+") + s;
    width = std::max(width, label.size());
    labels.push_back(label);
  }
  out << "skills: ";
  for (const auto& s : model.skills().names()) out << s << ' ';
  out << '\n';
  out << std::left << std::setw(static_cast<int>(width)) << "set" << "  " << std::setw(static_cast<int>(model.skills().size())) << "bits"
      << "  alpha  response\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::ostringstream alpha;
    alpha << '[';
    for (std::size_t j = 0; j < rows[i].alpha.size(); ++j) alpha << (j ? " " : "") << rows[i].alpha[j];
    alpha << ']';
    out << std::setw(static_cast<int>(width)) << labels[i] << "  " << rows[i].bitmap << "  " << alpha.str() << " ";
    for (const auto& t : rows[i].response) out << ' ' << t;
    out << '\n';
  }
  out << std::right;
}

data::DialogueExample load_context(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open context " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("history")) throw ParseError(path.string() + ": context needs a history field");
  const auto history = j.at("history").get<std::vector<std::string>>();
  const auto memory = j.value("memory", std::vector<std::string>{});
  if (!j.contains("target")) j["target"] = std::vector<std::string>{};
  if (!j.contains("skills")) j["skills"] = std::vector<std::string>{};
  if (!j.contains("types")) {
    std::vector<std::string> types(history.size(), "Usr");
    types.resize(history.size() + memory.size(), "memory");
    j["types"] = types;
  }
  if (!j.contains("segments")) {
    std::vector<std::string> segments(history.size(), "turn0");
    segments.resize(history.size() + memory.size(), "rec0");
    j["segments"] = segments;
  }
  return data::example_from_json(j.dump());
}

}  // namespace aop::cli
