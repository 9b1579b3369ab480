// aopdlg: data preparation, training, evaluation, skill composition,
// cost benchmarks and gradient checks.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "aop/cli/compose.hpp"
#include "aop/cli/config.hpp"
#include "aop/costbench/costbench.hpp"
#include "aop/data/annotated.hpp"
#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "aop/metrics/evaluate.hpp"
#include "aop/rng.hpp"
#include "aop/training/training.hpp"

namespace fs = std::filesystem;
using namespace aop;

namespace {

struct Common {
  std::string preset = "desk";
  std::string config_file;
  std::map<std::string, std::string> flags;
};

// Registers one flag per run setting; values are applied after the preset and
// the config file.
void add_setting_flags(CLI::App* sub, Common& common, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    sub->add_option_function<std::string>(
        flag, [&common, key](const std::string& v) { common.flags[key] = v; }, "override " + key);
  }
}

cli::RunConfig resolve(const Common& common) {
  auto cfg = cli::RunConfig::preset(common.preset);
  if (!common.config_file.empty()) cfg.merge_file(common.config_file);
  for (const auto& [k, v] : common.flags) cfg.set(k, v);
  return cfg;
}

void echo(const cli::RunConfig& cfg, const std::string& preset) {
  std::cerr << "# preset " << preset << '\n';
  std::istringstream lines(cfg.echo());
  for (std::string line; std::getline(lines, line);) std::cerr << "# " << line << '\n';
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoul(item));
  return out;
}

data::Dataset load_dataset(const fs::path& dir) {
  return {data::load_corpus(dir / "train.jsonl"), data::load_corpus(dir / "valid.jsonl"),
          data::load_corpus(dir / "test.jsonl")};
}

void write_dataset(const fs::path& dir, const data::Dataset& d, const data::EntityLexicon& lexicon) {
  fs::create_directories(dir);
  data::save_corpus(dir / "train.jsonl", d.train);
  data::save_corpus(dir / "valid.jsonl", d.valid);
  data::save_corpus(dir / "test.jsonl", d.test);
  lexicon.save(dir / "lexicon.tsv");
}

// ---- prepare-data --------------------------------------------------------

struct PrepareArgs {
  std::string input, output, schema, sizes = "2000,200,200";
  std::uint64_t seed = 1;
};

int run_prepare(const PrepareArgs& a) {
  const std::string schema = a.schema.empty() ? (a.input.empty() ? "synthetic" : "annotated") : a.schema;
  if (schema == "synthetic") {
    const auto s = parse_sizes(a.sizes);
    if (s.size() != 3) throw ContractError("--synthetic-sizes takes train,valid,test");
    const auto corpus = data::generate_synthetic_corpus(a.seed, {s[0], s[1], s[2]});
    write_dataset(a.output, corpus.data, corpus.lexicon);
    std::cout << "wrote " << corpus.data.train.size() << '/' << corpus.data.valid.size() << '/'
              << corpus.data.test.size() << " synthetic examples to " << a.output << '\n';
    return 0;
  }
  if (schema != "annotated") throw ContractError("unknown schema " + schema + " (synthetic or annotated)");
  if (a.input.empty()) throw ContractError("--schema annotated needs --input");
  auto dialogues = data::load_annotated_dialogues(a.input);
  Rng rng(a.seed);
  rng.shuffle(dialogues);
  data::Dataset d;
  data::EntityLexicon lexicon;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    auto& split = i % 10 == 8 ? d.valid : i % 10 == 9 ? d.test : d.train;
    for (auto& e : data::dialogue_examples(dialogues[i])) split.push_back(std::move(e));
    for (const auto& turn : dialogues[i].system_turns) {
      for (const auto& act : turn.turn.acts) {
        for (const auto& r : turn.results) {
          for (const auto& [attr, value] : r.fields) {
            if (attr == "name" || attr == "trainID" || attr == "id") lexicon.add(value, act.domain);
          }
        }
      }
    }
  }
  write_dataset(a.output, d, lexicon);
  std::cout << "wrote " << d.train.size() << '/' << d.valid.size() << '/' << d.test.size() << " examples from "
            << dialogues.size() << " dialogues to " << a.output << '\n';
  return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data, checkpoint, log;
};

int run_train(const TrainArgs& a, const Common& common) {
  const auto cfg = resolve(common);
  echo(cfg, common.preset);
  const auto d = load_dataset(a.data);
  const auto layout = data::corpus_skills(d.train);
  auto model_cfg = cfg.model_config();
  if (cfg.is_explicit("experts") && model_cfg.experts != layout.size()) {
    throw ContractError("experts = " + std::to_string(model_cfg.experts) + " but the corpus has " +
                        std::to_string(layout.size()) + " skills");
  }
  auto tc = cfg.train_config();
  tc.log_path = a.log;
  tc.checkpoint_path = a.checkpoint;
  auto model = experts::DialogueModel::build(cfg.variant(), model_cfg, d.train, layout, cfg.seed(),
                                             cfg.model_options());
  std::cout << experts::variant_name(model.variant()) << ": " << model.params().element_count() << " parameters, "
            << model.words().size() << " words, " << layout.size() << " skills\n";
  const auto result = training::train(model, d, tc, &std::cout);
  model.save(a.checkpoint);
  std::cout << "best epoch " << result.best_epoch << " valid token loss " << result.best_valid_loss << " after "
            << result.steps << " steps\n";
  if (experts::has_expert_bank(model.variant())) {
    std::cout << "test attention error rate " << training::attention_error_rate(model, d.test) << '\n';
  }
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, split = "test", nli, predictions, attention;
  bool json = false;
  std::size_t max_len = 60;
};

int run_eval(const EvalArgs& a) {
  const auto model = experts::DialogueModel::load(a.checkpoint);
  const fs::path dir = a.data;
  const auto examples = data::load_corpus(dir / (a.split + ".jsonl"));
  const auto lexicon = data::EntityLexicon::load(dir / "lexicon.tsv");
  std::unique_ptr<metrics::SubprocessNli> process;
  metrics::NliOracle oracle;
  if (!a.nli.empty()) {
    process = std::make_unique<metrics::SubprocessNli>(a.nli);
    oracle = [&](const std::string& u, const std::string& p) { return (*process)(u, p); };
  }
  const auto ev = metrics::evaluate(model, examples, lexicon, a.nli.empty() ? nullptr : &oracle, a.max_len);
  if (!a.predictions.empty()) {
    std::ofstream out(a.predictions);
    for (const auto& p : ev.predictions) {
      for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
      out << '\n';
    }
  }
  if (!a.attention.empty()) {
    std::ofstream out(a.attention);
    model.write_attention(out, examples);
  }
  std::cout << (a.json ? ev.report.to_json() : ev.report.to_text()) << '\n';
  return 0;
}

// ---- compose -------------------------------------------------------------

struct ComposeArgs {
  std::string checkpoint, context;
  std::vector<std::string> skills;
  bool normalize = false;
  std::size_t max_len = 40;
};

int run_compose(const ComposeArgs& a) {
  const auto model = experts::DialogueModel::load(a.checkpoint);
  const auto context = cli::load_context(a.context);
  std::vector<std::vector<std::string>> sets;
  for (const auto& s : a.skills) {
    std::vector<std::string> names;
    std::stringstream ss(s);
    for (std::string n; std::getline(ss, n, ',');) {
      if (!n.empty()) names.push_back(n);
    }
    sets.push_back(names);
  }
  if (sets.empty()) sets = cli::default_skill_sets(model.skills());
  const auto rows = cli::compose_demo(model, context, sets, a.normalize, a.max_len);
  cli::write_compose_table(std::cout, model, rows);
  return 0;
}

// ---- bench ---------------------------------------------------------------

struct BenchArgs {
  std::string grid = "default", out, lengths = "16,32";
  std::size_t reps = 21, experts = 13, inputs = 2;
  std::uint64_t seed = 1;
  bool table = false, no_timing = false;
};

int run_bench(const BenchArgs& a, const Common& common) {
  const auto theorem = costbench::verify_theorem(costbench::parse_grid(a.grid));
  if (a.table) theorem.write_table(std::cout);
  std::cout << "theorem: " << theorem.rows.size() << " points, " << theorem.asserted << " asserted (r>=2, t>=2), "
            << theorem.violations.size() << " violations, " << theorem.seconds << " s\n";
  for (const auto& v : theorem.violations) {
    std::cout << "counterexample r=" << v.model.r << " t=" << v.model.t << " d=" << v.model.d << " n=" << v.model.n
              << " aop=" << v.aop << " moe=" << v.moe << '\n';
  }
  std::vector<costbench::CompareReport> timings;
  if (!a.no_timing) {
    const auto cfg = resolve(common);
    echo(cfg, common.preset);
    for (auto t : parse_sizes(a.lengths)) {
      auto setup = costbench::make_bench_setup(a.experts, t, a.inputs, cfg.model_config(), a.seed);
      timings.push_back(costbench::empirical_compare(setup.model, setup.inputs, a.reps));
      costbench::write_compare(std::cout, timings.back());
    }
  }
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw Error("cannot write " + a.out);
    out << costbench::to_json(theorem, timings) << '\n';
  }
  return theorem.ok() ? 0 : 1;
}

// ---- gradcheck -----------------------------------------------------------

struct GradArgs {
  std::size_t dims = 8, experts = 3;
  std::uint64_t seed = 7;
  std::string variant = "AoP";
  double tolerance = 1e-4;
};

int run_gradcheck(const GradArgs& a) {
  const auto g = training::model_gradcheck(experts::parse_variant(a.variant), a.dims, a.experts, a.seed);
  const auto& r = g.result;
  std::cout << "checked " << r.checked << " of " << g.parameters << " parameters in " << g.tensors.size()
            << " tensors, max relative error " << r.max_rel_error << '\n';
  std::cout << "worst " << r.worst << '\n';
  const bool ok = r.max_rel_error < a.tolerance;
  std::cout << (ok ? "PASS" : "FAIL") << " (tolerance " << a.tolerance << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention over Parameters dialogue toolkit"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--preset", common.preset, "desk or paper defaults")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    sub->add_option("--config", common.config_file, "key = value settings file")->check(CLI::ExistingFile);
  };

  PrepareArgs prep;
  auto* p = app.add_subcommand("prepare-data", "write train/valid/test corpora and an entity lexicon");
  p->add_option("--input", prep.input, "annotated dialogues (JSON lines)")->check(CLI::ExistingFile);
  p->add_option("--output", prep.output, "output directory")->required();
  p->add_option("--schema", prep.schema, "synthetic or annotated");
  p->add_option("--seed", prep.seed)->capture_default_str();
  p->add_option("--synthetic-sizes", prep.sizes, "train,valid,test")->capture_default_str();

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "train a model variant");
  add_common(t);
  t->add_option("--data", train_args.data, "directory from prepare-data")->required()->check(CLI::ExistingDirectory);
  t->add_option("--checkpoint", train_args.checkpoint, "output checkpoint")->required();
  t->add_option("--log", train_args.log, "per-epoch CSV log");
  add_setting_flags(t, common,
                    {"variant", "d", "d_model", "layers", "heads", "depth", "filter", "experts", "hops", "batch", "lr",
                     "schedule", "warmup", "epochs", "patience", "max_steps", "token_weight", "skill_weight",
                     "max_grad_norm", "min_count", "seed", "normalize_oracle"});

  EvalArgs eval_args;
  auto* e = app.add_subcommand("eval", "score a checkpoint on a split");
  e->add_option("--checkpoint", eval_args.checkpoint)->required()->check(CLI::ExistingFile);
  e->add_option("--data", eval_args.data, "directory from prepare-data")->required()->check(CLI::ExistingDirectory);
  e->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "valid", "test"}))->capture_default_str();
  e->add_option("--nli", eval_args.nli, "NLI command: reads `utterance<TAB>persona` lines, answers +1/0/-1");
  e->add_option("--predictions", eval_args.predictions, "write one generated response per line");
  e->add_option("--attention", eval_args.attention, "write per-example expert weights as CSV");
  e->add_option("--max-len", eval_args.max_len)->capture_default_str();
  e->add_flag("--json", eval_args.json, "print the report as JSON");

  ComposeArgs compose_args;
  auto* c = app.add_subcommand("compose", "decode one context under hand-picked skill sets");
  c->add_option("--checkpoint", compose_args.checkpoint)->required()->check(CLI::ExistingFile);
  c->add_option("--context", compose_args.context, "JSON object with history and memory")
      ->required()
      ->check(CLI::ExistingFile);
  c->add_option("--skills", compose_args.skills, "comma-separated skill set; repeat for more rows");
  c->add_flag("--normalize", compose_args.normalize, "divide the weights by the number of skills");
  c->add_option("--max-len", compose_args.max_len)->capture_default_str();

  BenchArgs bench_args;
  auto* b = app.add_subcommand("bench", "cost theorem grid and AoP vs AoR timing");
  add_common(b);
  b->add_option("--grid", bench_args.grid, "default or r=2:13,t=2:64,d=8|64,n=8|64")->capture_default_str();
  b->add_option("--reps", bench_args.reps, "timed sweeps per path (median)")->capture_default_str();
  b->add_option("--out", bench_args.out, "JSON report");
  b->add_option("--experts", bench_args.experts, "experts in the timed bank")->capture_default_str();
  b->add_option("--lengths", bench_args.lengths, "decoder lengths to time")->capture_default_str();
  b->add_option("--inputs", bench_args.inputs, "inputs per sweep")->capture_default_str();
  b->add_option("--seed", bench_args.seed)->capture_default_str();
  b->add_flag("--table", bench_args.table, "print the full grid table");
  b->add_flag("--no-timing", bench_args.no_timing, "only evaluate the closed forms");

  GradArgs grad_args;
  auto* g = app.add_subcommand("gradcheck", "finite differences against backprop on a small model");
  g->add_option("--dims", grad_args.dims)->capture_default_str();
  g->add_option("--experts", grad_args.experts)->capture_default_str();
  g->add_option("--seed", grad_args.seed)->capture_default_str();
  g->add_option("--variant", grad_args.variant)->capture_default_str();
  g->add_option("--tolerance", grad_args.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*p) return run_prepare(prep);
    if (*t) return run_train(train_args, common);
    if (*e) return run_eval(eval_args);
    if (*c) return run_compose(compose_args);
    if (*b) return run_bench(bench_args, common);
    if (*g) return run_gradcheck(grad_args);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
