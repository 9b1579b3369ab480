#include "aop/cli/config.hpp"

#include <fstream>
#include <sstream>

#include "aop/errors.hpp"

namespace aop::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::set<std::string>& RunConfig::keys() {
  static const std::set<std::string> k = {
      "variant",  "d",        "d_model",      "layers",       "heads",         "depth",          "filter",
      "experts",  "hops",     "batch",        "lr",           "schedule",      "warmup",         "epochs",
      "patience", "max_steps", "token_weight", "skill_weight", "max_grad_norm", "min_count",      "seed",
      "normalize_oracle"};
  return k;
}

RunConfig RunConfig::preset(const std::string& name) {
  RunConfig c;
  auto put = [&](const std::string& k, const std::string& v) { c.set(k, v, false); };
  put("variant", "AoP");
  put("layers", "1");
  put("heads", "2");
  put("hops", "1");
  put("batch", "16");
  put("token_weight", "1");
  put("skill_weight", "1");
  put("max_grad_norm", "0");
  put("max_steps", "0");
  put("seed", "1");
  put("normalize_oracle", "false");
  if (name == "desk") {
    put("d", "64");
    put("d_model", "64");
    put("depth", "16");
    put("filter", "128");
    put("experts", "4");
    put("lr", "3e-3");
    put("schedule", "warmup");
    put("warmup", "300");
    put("epochs", "30");
    put("patience", "30");
    put("min_count", "5");
  } else if (name == "paper") {
    put("d", "300");
    put("d_model", "300");
    put("depth", "40");
    put("filter", "50");
    put("experts", "13");
    put("lr", "1e-3");
    put("schedule", "warmup");
    put("warmup", "4000");
    put("epochs", "100");
    put("patience", "5");
    put("min_count", "1");
  } else {
    throw ContractError("unknown preset: " + name);
  }
  return c;
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string() + ": expected key = value", n);
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!keys().count(key)) throw ParseError(path.string() + ": unknown key " + key, n);
    if (value.empty()) throw ParseError(path.string() + ": empty value for " + key, n);
    set(key, value);
  }
}

void RunConfig::set(const std::string& key, const std::string& value, bool explicit_setting) {
  if (!keys().count(key)) throw LookupError("unknown setting " + key);
  values_[key] = value;
  if (explicit_setting) explicit_.insert(key);
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw LookupError("setting " + key + " is not set");
  return it->second;
}

std::size_t RunConfig::size_value(const std::string& key) const {
  const auto& v = get(key);
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != v.size() || x < 0) throw ParseError(key + " must be a non-negative integer, got " + v);
  return static_cast<std::size_t>(x);
}

double RunConfig::real_value(const std::string& key) const {
  const auto& v = get(key);
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != v.size()) throw ParseError(key + " must be a number, got " + v);
  return x;
}

bool RunConfig::flag_value(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(key + " must be true or false, got " + v);
}

transformer::ModelConfig RunConfig::model_config() const {
  transformer::ModelConfig c;
  c.embedding_dim = size_value("d");
  c.model_dim = size_value("d_model");
  c.layers = size_value("layers");
  c.heads = size_value("heads");
  c.head_depth = size_value("depth");
  c.filter = size_value("filter");
  c.experts = size_value("experts");
  c.hops = size_value("hops");
  c.validate();
  return c;
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.batch_size = size_value("batch");
  t.learning_rate = real_value("lr");
  t.schedule = get("schedule");
  t.warmup = size_value("warmup");
  t.max_epochs = size_value("epochs");
  t.patience = size_value("patience");
  t.max_steps = size_value("max_steps");
  t.token_weight = real_value("token_weight");
  t.skill_weight = real_value("skill_weight");
  t.max_grad_norm = real_value("max_grad_norm");
  t.seed = seed();
  t.validate();
  return t;
}

experts::ModelOptions RunConfig::model_options() const {
  experts::ModelOptions o;
  o.min_count = size_value("min_count");
  o.normalize_oracle = flag_value("normalize_oracle");
  return o;
}

experts::Variant RunConfig::variant() const { return experts::parse_variant(get("variant")); }

std::uint64_t RunConfig::seed() const { return size_value("seed"); }

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace aop::cli
