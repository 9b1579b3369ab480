// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,3,5] [--models DIR]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "aop/autodiff/op_counter.hpp"
#include "aop/autodiff/ops.hpp"
#include "aop/cli/compose.hpp"
#include "aop/cli/config.hpp"
#include "aop/costbench/costbench.hpp"
#include "aop/data/query.hpp"
#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "aop/metrics/evaluate.hpp"
#include "aop/metrics/metrics.hpp"
#include "aop/rng.hpp"
#include "aop/training/training.hpp"

namespace fs = std::filesystem;
namespace ad = aop::autodiff;
namespace cb = aop::costbench;
namespace ex = aop::experts;
namespace mt = aop::metrics;
namespace tr = aop::transformer;
using aop::data::DialogueExample;
using Tokens = std::vector<std::string>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Tokens words(const std::string& text) {
  std::istringstream in(text);
  Tokens out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

double max_abs_diff(const ad::Tensor& a, const ad::Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0;
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// ---- 1 -------------------------------------------------------------------

Outcome theorem_grid() {
  const auto report = cb::verify_theorem(cb::parse_grid("r=2:13,t=2:64,d=8|64|300,n=8|64|300"));
  bool strict = true;
  for (const auto& row : report.rows) strict = strict && row.aop < row.moe;
  const bool pass = report.ok() && strict && report.asserted == 12 * 63 * 9 && report.seconds < 1.0;
  return {pass, std::to_string(report.rows.size()) + " points, " + std::to_string(report.violations.size()) +
                    " violations, strict everywhere: " + (strict ? "yes" : "no")};
}

// ---- 2 -------------------------------------------------------------------

Outcome invocation_counts() {
  bool pass = true;
  std::string detail;
  for (std::size_t t : {16, 32}) {
    auto setup = cb::make_bench_setup(13, t, 2, tr::ModelConfig::desk(), 1);
    const auto r = cb::empirical_compare(setup.model, setup.inputs, 21);
    const bool counts = r.aop.per_sweep.decoder_invocations == 2 && r.aor.per_sweep.decoder_invocations == 26;
    const bool order = r.aop.median_seconds < r.aor.median_seconds;
    pass = pass && counts && order;
    if (!detail.empty()) detail += "; ";
    detail += "t=" + std::to_string(t) + ": passes/input AoP " + std::to_string(r.aop.per_sweep.decoder_invocations / 2) +
              " AoR " + std::to_string(r.aor.per_sweep.decoder_invocations / 2) + ", AoR/AoP time " +
              fmt(r.ratio(), 3);
  }
  return {pass, detail};
}

// ---- 3 -------------------------------------------------------------------

const std::vector<std::string> kFourSkills = {"SQL", "BOOK", "Hotel", "Train"};

std::vector<DialogueExample> relabeled(std::vector<DialogueExample> examples, const std::vector<std::string>& skills) {
  for (auto& e : examples) {
    std::vector<std::string> kept;
    for (const auto& s : e.skills) {
      if (std::find(skills.begin(), skills.end(), s) != skills.end()) kept.push_back(s);
    }
    e.skills = kept.empty() ? std::vector<std::string>{skills.front()} : kept;
  }
  return examples;
}

Outcome one_hot_equivalence() {
  const auto corpus = aop::data::generate_synthetic_corpus(11, {300, 1, 100});
  const auto train = relabeled(corpus.data.train, kFourSkills);
  const auto inputs = relabeled(corpus.data.test, kFourSkills);
  auto model = ex::DialogueModel::build(ex::Variant::Aop, tr::ModelConfig::desk(), train,
                                        aop::data::SkillLayout(kFourSkills), 5);
  ad::NoGradGuard no_grad;
  const auto& core = model.core();
  const auto& bank = model.bank();
  double worst = 0;
  std::size_t compared = 0;
  for (const auto& e : inputs) {
    const auto enc = model.encode(e);
    const ex::ForwardInput in{enc.source, enc.target_in, enc.source_ids.ext_ids, enc.ext_vocab};
    for (std::size_t i = 0; i < bank.size(); ++i) {
      std::vector<double> onehot(bank.size(), 0.0);
      onehot[i] = 1.0;
      const auto alpha = ad::Tensor::from_data({1, bank.size()}, onehot);
      const auto direct = ex::single_forward(core, bank.experts[i], in).probs;
      const auto aop = ex::aop_forward(core, bank, model.query_encoder(), in, &alpha).probs;
      const auto aor = ex::aor_forward(core, bank, model.query_encoder(), in, &alpha).probs;
      worst = std::max({worst, max_abs_diff(aop, direct), max_abs_diff(aor, direct), max_abs_diff(aop, aor)});
      ++compared;
    }
  }
  return {worst <= 1e-12 && compared == 100 * bank.size(),
          std::to_string(inputs.size()) + " inputs x " + std::to_string(bank.size()) +
              " experts, max |difference| " + fmt(worst, 3)};
}

// ---- 4 -------------------------------------------------------------------

Outcome gradient_check() {
  const auto g = aop::training::model_gradcheck(ex::Variant::Aop, 8, 3, 7);
  auto has = [&](const std::string& prefix) {
    return std::any_of(g.tensors.begin(), g.tensors.end(), [&](const auto& n) { return n.rfind(prefix, 0) == 0; });
  };
  const bool covered = g.result.checked == g.parameters && has("experts.keys") && has("query.") &&
                       has("expert.SQL") && has("expert.BOOK") && has("expert.Hotel") && has("out.gate_");
  return {covered && g.result.max_rel_error < 1e-4,
          std::to_string(g.result.checked) + "/" + std::to_string(g.parameters) + " parameters, max relative error " +
              fmt(g.result.max_rel_error, 3)};
}

// ---- 5 / 9 ---------------------------------------------------------------

struct Trained {
  std::unique_ptr<ex::DialogueModel> model;
  double seconds = 0;
};

class SyntheticRun {
 public:
  explicit SyntheticRun(fs::path models) : models_(std::move(models)), corpus_(aop::data::generate_synthetic_corpus(1)) {}

  const aop::data::SyntheticCorpus& corpus() const { return corpus_; }

  const Trained& get(ex::Variant v) {
    auto it = trained_.find(v);
    if (it != trained_.end()) return it->second;
    const auto preset = aop::cli::RunConfig::preset("desk");
    auto tc = preset.train_config();
    auto options = preset.model_options();
    options.normalize_oracle = v == ex::Variant::AopOracle;
    const auto layout = aop::data::corpus_skills(corpus_.data.train);
    Trained t;
    const auto start = std::chrono::steady_clock::now();
    t.model = std::make_unique<ex::DialogueModel>(
        ex::DialogueModel::build(v, preset.model_config(), corpus_.data.train, layout, preset.seed(), options));
    const auto result = aop::training::train(*t.model, corpus_.data, tc);
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!models_.empty()) {
      fs::create_directories(models_);
      t.model->save(models_ / (ex::variant_name(v) + ".bin"));
    }
    std::cout << "  trained " << ex::variant_name(v) << " in " << fmt(t.seconds, 4) << " s, best epoch "
              << result.best_epoch << '\n';
    return trained_.emplace(v, std::move(t)).first->second;
  }

  double query_exact_match(const ex::DialogueModel& model) const {
    std::size_t total = 0, hit = 0;
    for (const auto& e : corpus_.data.test) {
      if (!aop::data::is_query(e.target)) continue;
      ++total;
      hit += model.generate(e, 60) == e.target;
    }
    return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
  }

 private:
  fs::path models_;
  aop::data::SyntheticCorpus corpus_;
  std::map<ex::Variant, Trained> trained_;
};

Outcome synthetic_benchmark(SyntheticRun& run) {
  const auto& test = run.corpus().data.test;
  const auto& aop = run.get(ex::Variant::Aop);
  const auto& nolv = run.get(ex::Variant::AopNoLv);
  const auto& oracle = run.get(ex::Variant::AopOracle);
  const double seconds = aop.seconds + nolv.seconds + oracle.seconds;

  const double em = run.query_exact_match(*aop.model);
  const double em_oracle = run.query_exact_match(*oracle.model);
  const double err = aop::training::attention_error_rate(*aop.model, test);
  const double err_nolv = aop::training::attention_error_rate(*nolv.model, test);
  const bool pass = em >= 0.95 && err <= 0.05 && err_nolv > err && em_oracle >= em && seconds < 1800;
  return {pass, "AoP query EM " + fmt(em) + ", attention error " + fmt(err) + "; AoP-noLV attention error " +
                    fmt(err_nolv) + "; AoP-O query EM " + fmt(em_oracle) + "; training " + fmt(seconds, 4) + " s"};
}

Outcome composition(SyntheticRun& run) {
  const auto& model = *run.get(ex::Variant::Aop).model;
  std::vector<std::vector<std::string>> sets;
  std::vector<Tokens> prefixes;
  for (const auto& domain : aop::data::synthetic_domains()) {
    const auto skill = aop::data::domain_skill(domain);
    sets.push_back({"SQL", skill});
    prefixes.push_back({"SELECT", "*", "FROM", domain});
    sets.push_back({"BOOK", skill});
    prefixes.push_back({"BOOK", "FROM", domain});
  }
  // contexts whose gold response is a train SQL query
  std::size_t contexts = 0, rows = 0, good = 0;
  std::string first_bad;
  for (const auto& e : run.corpus().data.test) {
    if (aop::data::example_kind(e) != "sql" || aop::data::example_domain(e) != "train") continue;
    ++contexts;
    const auto out = aop::cli::compose_demo(model, e, sets, true, 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
      ++rows;
      const auto& r = out[i].response;
      const bool ok = r.size() >= prefixes[i].size() && std::equal(prefixes[i].begin(), prefixes[i].end(), r.begin());
      good += ok;
      if (!ok && first_bad.empty()) {
        std::ostringstream s;
        s << e.id << " with";
        for (const auto& n : sets[i]) s << ' ' << n;
        s << " ->";
        for (const auto& w : r) s << ' ' << w;
        first_bad = s.str();
      }
    }
  }
  std::string detail = std::to_string(good) + "/" + std::to_string(rows) + " rows over " + std::to_string(contexts) +
                       " contexts and " + std::to_string(aop::data::synthetic_domains().size()) + " domains";
  if (!first_bad.empty()) detail += "; first miss: " + first_bad;
  return {contexts > 0 && good == rows, detail};
}

// ---- 6 -------------------------------------------------------------------

Outcome query_synthesis() {
  using namespace aop::data;
  const auto hotel = synthesize_sql_query("hotel", {{"type", "hotel"}, {"stars", "2"}, {"pricerange", "cheap"}});
  const auto hotel_ref = parse_query_text("SELECT * FROM hotel WHERE pricerange=`cheap' AND stars=2 AND type=`hotel'");
  const auto train = synthesize_sql_query(
      "train", {{"departure", "london"}, {"arriveBy", "1530"}, {"day", "monday"}, {"destination", "cambridge"}});
  const auto train_ref = parse_query_text(
      "SELECT * FROM train WHERE destination=``cambridge'' AND day=``monday'' AND arriveBy < ``1530'' and "
      "departure=``london''");
  const bool tables = hotel == query_tokens(hotel_ref) &&
                      hotel == words("SELECT * FROM hotel WHERE pricerange = cheap AND stars = 2 AND type = hotel") &&
                      train == query_tokens(train_ref) &&
                      train == words("SELECT * FROM train WHERE destination = cambridge AND day = monday AND "
                                     "arriveBy < 1530 AND departure = london");
  const auto corpus = generate_synthetic_corpus(1);
  std::size_t total = 0, parsed = 0;
  for (const auto* split : {&corpus.data.train, &corpus.data.valid, &corpus.data.test}) {
    for (const auto& e : *split) {
      if (e.target.empty() || (e.target[0] != "SELECT" && e.target[0] != "BOOK")) continue;
      ++total;
      try {
        if (query_tokens(parse_query(e.target)) == e.target) ++parsed;
      } catch (const aop::ParseError&) {
      }
    }
  }
  return {tables && total > 0 && parsed == total,
          std::string("table strings ") + (tables ? "match" : "DIFFER") + ", " + std::to_string(parsed) + "/" +
              std::to_string(total) + " synthesized queries parse"};
}

// ---- 7 -------------------------------------------------------------------

Outcome metric_oracles() {
  std::vector<std::string> problems;
  auto split_all = [](const std::vector<std::string>& lines) {
    std::vector<Tokens> out;
    for (const auto& l : lines) out.push_back(words(l));
    return out;
  };
  const auto hyps = split_all({"the cheapest hotel in the north is the avalon and it has 1 star .",
                               "i have booked a table for 4 people at 7 pm , your reference is abc123 .",
                               "tr7553 leaves cambridge at 10:15 and arrives in london by 11:45 ."});
  const auto refs = split_all({"the avalon is the cheapest hotel in the north and it has 1 star .",
                               "i booked a table for 4 people at 7 pm . the reference number is abc123 .",
                               "tr7553 leaves cambridge at 10:15 and arrives in london at 11:45 ."});
  const double b = mt::bleu(hyps, refs);
  if (std::abs(b - 68.0116737771001) >= 0.01) problems.push_back("BLEU " + fmt(b, 10));

  aop::data::EntityLexicon lex;
  lex.add("avalon", "hotel");
  lex.add("tr7553", "train");
  lex.add("london", "train");
  const double f_all = mt::entity_counts(words("avalon and tr7553"), words("tr7553 then avalon"), lex).f1();
  const double f_none = mt::entity_counts(words("no idea"), words("tr7553 then avalon"), lex).f1();
  const double f_half = mt::entity_counts(words("avalon and london"), words("avalon and tr7553"), lex).f1();
  if (f_all != 1.0 || f_none != 0.0 || f_half != 0.5) problems.push_back("entity F1");

  mt::KeywordNli nli;
  nli.entail("dog", "have dog");
  nli.contradict("no pets", "have dog");
  nli.contradict("hate jazz", "listen jazz");
  nli.entail("jazz", "listen jazz");
  const std::vector<std::string> pool = {"i have a dog .", "i listen to jazz .", "i live in tokyo ."};
  const std::vector<std::string> utterances = {"my dog", "no pets", "i hate jazz", "hello", "jazz and my dog"};
  aop::Rng rng(3);
  std::size_t additive = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> p1, p2;
    for (auto n = rng.below(4); n > 0; --n) p1.push_back(rng.pick(pool));
    for (auto n = rng.below(4); n > 0; --n) p2.push_back(rng.pick(pool));
    auto both = p1;
    both.insert(both.end(), p2.begin(), p2.end());
    const auto& u = rng.pick(utterances);
    additive += mt::consistency(u, both, nli) == mt::consistency(u, p1, nli) + mt::consistency(u, p2, nli);
  }
  if (additive != 1000) problems.push_back("additivity " + std::to_string(additive) + "/1000");

  const auto corpus = aop::data::generate_synthetic_corpus(2, {60, 30, 1});
  tr::ModelConfig small;
  small.embedding_dim = small.model_dim = 16;
  small.head_depth = 8;
  small.filter = 24;
  const auto model = ex::DialogueModel::build(ex::Variant::Aop, small, corpus.data.train,
                                              aop::data::corpus_skills(corpus.data.train), 2);
  const auto totals = aop::training::corpus_nll(model, corpus.data.valid);
  const double ppl_gap = std::abs(mt::perplexity(model, corpus.data.valid) - std::exp(totals.mean()));
  if (ppl_gap >= 1e-9) problems.push_back("perplexity gap " + fmt(ppl_gap, 3));

  std::string detail = "BLEU " + fmt(b, 10) + ", F1 cases " + fmt(f_all) + "/" + fmt(f_none) + "/" + fmt(f_half) +
                       ", additivity " + std::to_string(additive) + "/1000, perplexity gap " + fmt(ppl_gap, 3);
  for (const auto& p : problems) detail += "; bad " + p;
  return {problems.empty(), detail};
}

// ---- 8 -------------------------------------------------------------------

Outcome universal_variant() {
  const auto corpus = aop::data::generate_synthetic_corpus(4, {100, 1, 10});
  const auto layout = aop::data::corpus_skills(corpus.data.train);
  const auto cfg = tr::ModelConfig::desk();
  bool counts = true;
  std::string detail;
  for (auto [plain, universal] : {std::pair{ex::Variant::Trs, ex::Variant::TrsU}, std::pair{ex::Variant::Aop, ex::Variant::AopU}}) {
    const auto a = ex::DialogueModel::build(plain, cfg, corpus.data.train, layout, 1);
    const auto b = ex::DialogueModel::build(universal, cfg, corpus.data.train, layout, 1);
    counts = counts && b.config().hops == 6 && a.params().element_count() == b.params().element_count();
    detail += ex::variant_name(universal) + " " + std::to_string(b.params().element_count()) + " vs " +
              std::to_string(a.params().element_count()) + " parameters; ";
  }
  const auto model = ex::DialogueModel::build(ex::Variant::Trs, cfg, corpus.data.train, layout, 1);
  ad::NoGradGuard no_grad;
  bool bitwise = true;
  for (const auto& e : corpus.data.test) {
    const auto enc = model.encode(e);
    const auto h = ex::encode_source(model.core(), enc.source);
    const auto y = tr::embed_target(enc.target_in, model.core().tables);
    const auto looped = tr::universal_decode(model.decoder(), y, h, 1, nullptr);
    const auto plain = tr::decode(model.decoder(), y, h, nullptr);
    bitwise = bitwise && looped.shape() == plain.shape() &&
              std::equal(looped.data().begin(), looped.data().end(), plain.data().begin());
  }
  detail += std::string("one hop equals plain decode bitwise: ") + (bitwise ? "yes" : "no");
  return {counts && bitwise, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string models;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--models", models, "directory for the trained synthetic-run checkpoints");
  CLI11_PARSE(app, argc, argv);

  SyntheticRun run(models);
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "cost theorem grid", 1, theorem_grid},
      {2, "decoder invocation counts and timing", 60, invocation_counts},
      {3, "one-hot equivalence", 60, one_hot_equivalence},
      {4, "full-model gradient check", 300, gradient_check},
      {5, "synthetic multi-skill benchmark", 1800, [&] { return synthetic_benchmark(run); }},
      {6, "query synthesis", 1, query_synthesis},
      {7, "metric oracles", 10, metric_oracles},
      {8, "universal variant", 10, universal_variant},
      {9, "skill composition", 60, [&] { return composition(run); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    // criterion 9 reuses the criterion 5 model; its own clock excludes that training
    if (c.id == 9) run.get(ex::Variant::Aop);
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.id == 5) {
      seconds = run.get(ex::Variant::Aop).seconds + run.get(ex::Variant::AopNoLv).seconds +
                run.get(ex::Variant::AopOracle).seconds;
    }
    const bool pass = o.pass && seconds < c.limit;
    failures += !pass;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.name << " (" << fmt(seconds, 3)
              << " s, limit " << c.limit << " s)  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
