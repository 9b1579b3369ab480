#include "aop/costbench/costbench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "aop/autodiff/kernels.hpp"
#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "json.hpp"

namespace aop::costbench {

namespace ad = aop::autodiff;
namespace ex = aop::experts;

void CostModel::validate() const {
  if (r == 0 || t == 0 || d == 0 || n == 0) throw ContractError("cost model fields must be positive");
}

std::uint64_t moe_cost(const CostModel& m) {
  m.validate();
  return m.r * m.t * m.d * m.n + m.r * m.t * m.n;
}

std::uint64_t aop_cost(const CostModel& m) {
  m.validate();
  return (m.r + m.t) * m.d * m.n;
}

std::vector<CostModel> default_grid() {
  std::vector<CostModel> grid;
  const std::uint64_t widths[] = {8, 64, 300};
  for (std::uint64_t r = 1; r <= 13; ++r)
    for (std::uint64_t t = 1; t <= 64; ++t)
      for (auto d : widths)
        for (auto n : widths) grid.push_back({r, t, d, n});
  return grid;
}

namespace {

std::vector<std::uint64_t> parse_values(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  try {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, colon)), hi = std::stoull(text.substr(colon + 1));
      if (lo > hi) throw ParseError("empty range for " + key);
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
      return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '|')) out.push_back(std::stoull(item));
  } catch (const std::logic_error&) {
    throw ParseError("bad grid values for " + key + ": " + text);
  }
  if (out.empty()) throw ParseError("no grid values for " + key);
  return out;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace

std::vector<CostModel> parse_grid(const std::string& spec) {
  if (spec == "default") return default_grid();
  std::vector<std::uint64_t> rs{2}, ts{2}, ds{8}, ns{8};
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ParseError("grid entry without '=': " + part);
    const auto key = part.substr(0, eq);
    auto values = parse_values(key, part.substr(eq + 1));
    if (key == "r") rs = values;
    else if (key == "t") ts = values;
    else if (key == "d") ds = values;
    else if (key == "n") ns = values;
    else throw ParseError("unknown grid key " + key);
  }
  std::vector<CostModel> grid;
  for (auto r : rs)
    for (auto t : ts)
      for (auto d : ds)
        for (auto n : ns) {
          grid.push_back({r, t, d, n});
          grid.back().validate();
        }
  return grid;
}

TheoremReport verify_theorem(const std::vector<CostModel>& grid) {
  const auto start = std::chrono::steady_clock::now();
  TheoremReport report;
  report.rows.reserve(grid.size());
  for (const auto& m : grid) {
    GridRow row{m, moe_cost(m), aop_cost(m), m.r >= 2 && m.t >= 2, true};
    if (row.asserted) {
      ++report.asserted;
      row.holds = row.aop < row.moe;
      if (!row.holds) report.violations.push_back(row);
    }
    report.rows.push_back(row);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void TheoremReport::write_table(std::ostream& out) const {
  out << std::setw(4) << "r" << std::setw(5) << "t" << std::setw(6) << "d" << std::setw(6) << "n" << std::setw(14)
      << "moe" << std::setw(14) << "aop" << "  check\n";
  for (const auto& row : rows) {
    out << std::setw(4) << row.model.r << std::setw(5) << row.model.t << std::setw(6) << row.model.d << std::setw(6)
        << row.model.n << std::setw(14) << row.moe << std::setw(14) << row.aop << "  "
        << (row.asserted ? (row.holds ? "ok" : "VIOLATION") : "-") << '\n';
  }
  out << rows.size() << " points, " << asserted << " asserted, " << violations.size() << " violations\n";
  for (const auto& v : violations) {
    out << "counterexample r=" << v.model.r << " t=" << v.model.t << " d=" << v.model.d << " n=" << v.model.n << '\n';
  }
}

BenchSetup make_bench_setup(std::size_t experts, std::size_t target_length, std::size_t count,
                            const transformer::ModelConfig& cfg, std::uint64_t seed) {
  if (experts == 0 || target_length == 0 || count == 0) throw ContractError("bench setup sizes must be positive");
  const auto& known = data::full_skill_names();
  if (experts > known.size()) throw ContractError("at most " + std::to_string(known.size()) + " experts");
  const std::vector<std::string> names(known.begin(), known.begin() + static_cast<std::ptrdiff_t>(experts));
  auto corpus = data::generate_synthetic_corpus(seed, {count, 1, 1});
  for (auto& e : corpus.data.train) e.skills = {names.front()};
  auto model_cfg = cfg;
  model_cfg.experts = experts;
  BenchSetup setup{ex::DialogueModel::build(ex::Variant::Aop, model_cfg, corpus.data.train,
                                            data::SkillLayout(names), seed),
                   {}};
  Rng rng(seed + 1);
  const auto vocab = setup.model.words().size();
  for (const auto& e : corpus.data.train) {
    auto enc = setup.model.encode(e);
    enc.target_in.assign(1, transformer::kSos);
    while (enc.target_in.size() < target_length) {
      enc.target_in.push_back(static_cast<int>(transformer::kUnk + rng.below(vocab - transformer::kUnk)));
    }
    enc.target_out.clear();
    setup.inputs.push_back(std::move(enc));
  }
  return setup;
}

CompareReport empirical_compare(const ex::DialogueModel& model, const std::vector<ex::EncodedExample>& inputs,
                                std::size_t repetitions) {
  if (inputs.empty() || repetitions == 0) throw ContractError("comparison needs inputs and repetitions");
  const auto& core = model.core();
  const auto& bank = model.bank();
  const auto& query = model.query_encoder();

  CompareReport report;
  report.experts = bank.size();
  report.target_length = inputs.front().target_in.size();
  report.inputs = inputs.size();
  report.repetitions = repetitions;

  const bool was_serial = kernels::force_serial();
  kernels::set_force_serial(true);
  ad::NoGradGuard no_grad;

  auto sweep = [&](bool aop) {
    for (const auto& e : inputs) {
      const ex::ForwardInput in{e.source, e.target_in, e.source_ids.ext_ids, e.ext_vocab};
      if (aop) ex::aop_forward(core, bank, query, in);
      else ex::aor_forward(core, bank, query, in);
    }
  };
  auto measure = [&](bool aop, PathStats& stats) {
    {
      ad::CounterScope scope(stats.per_sweep);
      sweep(aop);
    }
    std::vector<double> times;
    for (std::size_t k = 0; k < repetitions; ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      sweep(aop);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    stats.median_seconds = median(std::move(times));
  };
  try {
    measure(true, report.aop);
    measure(false, report.aor);
  } catch (...) {
    kernels::set_force_serial(was_serial);
    throw;
  }
  kernels::set_force_serial(was_serial);

  if (report.aop.per_sweep.decoder_invocations != inputs.size()) {
    throw ContractError("AoP ran " + std::to_string(report.aop.per_sweep.decoder_invocations) +
                        " decoder passes for " + std::to_string(inputs.size()) + " inputs");
  }
  if (report.aor.per_sweep.decoder_invocations != inputs.size() * bank.size()) {
    throw ContractError("AoR ran " + std::to_string(report.aor.per_sweep.decoder_invocations) +
                        " decoder passes for " + std::to_string(inputs.size()) + " inputs");
  }
  return report;
}

void write_compare(std::ostream& out, const CompareReport& report) {
  const auto per = [&](std::uint64_t v) { return static_cast<double>(v) / static_cast<double>(report.inputs); };
  out << "r=" << report.experts << " t=" << report.target_length << " inputs=" << report.inputs
      << " reps=" << report.repetitions << '\n';
  out << std::fixed << std::setprecision(6);
  for (const auto& [name, s] : {std::pair{"AoP", &report.aop}, std::pair{"AoR", &report.aor}}) {
    out << "  " << name << "  median " << s->median_seconds << " s  decoder passes/input "
        << std::setprecision(0) << per(s->per_sweep.decoder_invocations) << "  MACs/input "
        << per(s->per_sweep.multiply_adds) << "  param-sum/input " << per(s->per_sweep.param_sum_elements)
        << std::setprecision(6) << '\n';
  }
  out << "  AoR/AoP time ratio " << std::setprecision(3) << report.ratio() << '\n';
  out << std::defaultfloat;
}

std::string to_json(const TheoremReport& theorem, const std::vector<CompareReport>& timings) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : theorem.rows) {
    rows.push_back({{"r", row.model.r},
                    {"t", row.model.t},
                    {"d", row.model.d},
                    {"n", row.model.n},
                    {"moe_cost", row.moe},
                    {"aop_cost", row.aop},
                    {"asserted", row.asserted},
                    {"holds", row.holds}});
  }
  nlohmann::json j;
  j["theorem"] = {{"points", theorem.rows.size()},
                  {"asserted", theorem.asserted},
                  {"violations", theorem.violations.size()},
                  {"seconds", theorem.seconds},
                  {"table", rows}};
  j["timing"] = nlohmann::json::array();
  for (const auto& c : timings) {
    auto counters = [](const PathStats& s) {
      return nlohmann::json{{"median_seconds", s.median_seconds},
                            {"decoder_invocations", s.per_sweep.decoder_invocations},
                            {"multiply_adds", s.per_sweep.multiply_adds},
                            {"param_sum_elements", s.per_sweep.param_sum_elements}};
    };
    j["timing"].push_back({{"experts", c.experts},
                           {"target_length", c.target_length},
                           {"inputs", c.inputs},
                           {"repetitions", c.repetitions},
                           {"aop", counters(c.aop)},
                           {"aor", counters(c.aor)},
                           {"aor_over_aop", c.ratio()}});
  }
  return j.dump(2);
}

}  // namespace aop::costbench
