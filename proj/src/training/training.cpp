#include "aop/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "aop/autodiff/ops.hpp"
#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "aop/rng.hpp"
#include "aop/transformer/vocab.hpp"

namespace aop::training {

namespace ad = aop::autodiff;
namespace ex = aop::experts;
namespace tr = aop::transformer;

void TrainConfig::validate() const {
  if (batch_size == 0) throw ContractError("batch size must be at least 1");
  if (patience == 0) throw ContractError("patience must be at least 1");
  if (max_epochs == 0) throw ContractError("max epochs must be at least 1");
  if (!(learning_rate > 0)) throw ContractError("learning rate must be positive");
  ad::Schedule::parse(schedule, learning_rate, warmup);
}

Tensor token_loss(const Tensor& probs, std::span<const int> targets) {
  if (probs.rows() != targets.size()) throw DimensionError("one target per distribution row");
  std::vector<int> ids;
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] < 0 || static_cast<std::size_t>(targets[t]) >= probs.cols()) {
      throw VocabularyError("target id " + std::to_string(targets[t]) + " outside a distribution of " +
                            std::to_string(probs.cols()));
    }
    if (targets[t] == tr::kPad) continue;
    rows.push_back(t);
    ids.push_back(targets[t]);
  }
  if (ids.empty()) return Tensor::scalar(0.0);
  Tensor kept = probs;
  if (rows.size() != targets.size()) {
    std::vector<Tensor> parts;
    for (auto r : rows) parts.push_back(ad::row(probs, r));
    kept = ad::concat_rows(parts);
  }
  return ad::scale(ad::sum(ad::log(ad::pick(kept, ids))), -1.0);
}

Tensor skill_loss(const Tensor& logits, std::span<const double> skills) {
  if (logits.size() != skills.size()) {
    throw ContractError("skill loss over " + std::to_string(logits.size()) + " logits and " +
                        std::to_string(skills.size()) + " labels");
  }
  return ad::bce_with_logits_sum(logits, skills);
}

bool uses_skill_loss(const ex::DialogueModel& model, const TrainConfig& cfg) {
  return !cfg.disable_skill_loss && ex::has_skill_loss(model.variant());
}

LossTerms example_loss(const ex::DialogueModel& model, const ex::EncodedExample& e, const TrainConfig& cfg) {
  const auto out = model.forward(e);
  LossTerms terms;
  terms.token = token_loss(out.probs, e.target_out);
  terms.total = cfg.token_weight == 1.0 ? terms.token : ad::scale(terms.token, cfg.token_weight);
  if (uses_skill_loss(model, cfg)) {
    terms.skill = skill_loss(out.logits, e.skills);
    terms.total = ad::add(terms.total, cfg.skill_weight == 1.0 ? terms.skill : ad::scale(terms.skill, cfg.skill_weight));
  }
  return terms;
}

double NllTotals::mean() const { return tokens ? nll / static_cast<double>(tokens) : 0.0; }

NllTotals corpus_nll(const ex::DialogueModel& model, const std::vector<data::DialogueExample>& examples) {
  ad::NoGradGuard guard;
  NllTotals totals;
  for (const auto& e : examples) {
    const auto enc = model.encode(e);
    totals.nll += token_loss(model.forward(enc).probs, enc.target_out).item();
    totals.tokens += static_cast<std::size_t>(
        std::count_if(enc.target_out.begin(), enc.target_out.end(), [](int id) { return id != tr::kPad; }));
  }
  return totals;
}

double attention_error_rate(const ex::DialogueModel& model, const std::vector<data::DialogueExample>& examples) {
  if (model.variant() == ex::Variant::AopOracle) return 0.0;
  if (!ex::has_expert_bank(model.variant())) {
    throw ContractError(ex::variant_name(model.variant()) + " has no skill attention");
  }
  if (examples.empty()) return 0.0;
  ad::NoGradGuard guard;
  std::size_t wrong = 0;
  for (const auto& e : examples) {
    const auto enc = model.encode(e);
    const Tensor scores = model.attention(enc).logits;
    const auto logits = scores.data();
    for (std::size_t i = 0; i < logits.size(); ++i) {
      // sigmoid(x) > 0.5 exactly when x > 0
      if ((logits[i] > 0.0) != (enc.skills[i] == 1.0)) {
        ++wrong;
        break;
      }
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(examples.size());
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,train_token_loss,train_skill_loss,valid_token_loss,attention_error_rate\n";
  out.precision(10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_token_loss << ',' << r.train_skill_loss << ',' << r.valid_token_loss << ',';
    if (!std::isnan(r.attention_error_rate)) out << r.attention_error_rate;
    out << '\n';
  }
}

TrainResult train(ex::DialogueModel& model, const data::Dataset& data, const TrainConfig& cfg,
                  std::ostream* progress) {
  cfg.validate();
  if (data.train.empty()) throw ContractError("training split is empty");
  const auto schedule = ad::Schedule::parse(cfg.schedule, cfg.learning_rate, cfg.warmup);
  ad::AdamConfig adam_cfg;
  adam_cfg.max_grad_norm = cfg.max_grad_norm;
  ad::Adam adam(adam_cfg);
  Rng rng(cfg.seed);

  std::vector<ex::EncodedExample> encoded;
  encoded.reserve(data.train.size());
  for (const auto& e : data.train) encoded.push_back(model.encode(e));
  const auto& valid = data.valid.empty() ? data.train : data.valid;
  const bool has_attention = ex::has_expert_bank(model.variant());

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best = model.params().snapshot();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double token_sum = 0, skill_sum = 0;
    bool stop = false;
    for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto terms = example_loss(model, encoded[order[i]], cfg);
        const double value = terms.total.item();
        if (!std::isfinite(value)) {
          throw NumericError("non-finite loss on example " + encoded[order[i]].id + " at epoch " +
                             std::to_string(epoch));
        }
        token_sum += terms.token.item();
        if (terms.skill.defined()) skill_sum += terms.skill.item();
        ad::backward(ad::scale(terms.total, inv));
      }
      ad::optimizer_step(model.params(), adam, schedule);
      ++result.steps;
      stop = cfg.max_steps && result.steps >= cfg.max_steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_token_loss = token_sum / static_cast<double>(encoded.size());
    rec.train_skill_loss = skill_sum / static_cast<double>(encoded.size());
    rec.valid_token_loss = corpus_nll(model, valid).mean();
    rec.attention_error_rate =
        has_attention ? attention_error_rate(model, valid) : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);
    if (progress) {
      *progress << "epoch " << epoch << " train_token " << rec.train_token_loss << " train_skill "
                << rec.train_skill_loss << " valid_token " << rec.valid_token_loss;
      if (has_attention) *progress << " attention_error " << rec.attention_error_rate;
      *progress << '\n';
    }

    if (rec.valid_token_loss < result.best_valid_loss) {
      result.best_valid_loss = rec.valid_token_loss;
      result.best_epoch = epoch;
      best = model.params().snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (stop) break;
  }
  model.params().restore(best);
  model.params().zero_grad();
  if (!cfg.log_path.empty()) write_log_csv(cfg.log_path, result.history);
  if (!cfg.checkpoint_path.empty()) model.save(cfg.checkpoint_path);
  return result;
}

ModelGradCheck model_gradcheck(experts::Variant variant, std::size_t dims, std::size_t experts, std::uint64_t seed) {
  const auto& all = data::synthetic_skill_names();
  if (experts == 0 || experts > all.size()) {
    throw ContractError("gradcheck supports 1 to " + std::to_string(all.size()) + " experts");
  }
  if (dims < 2 || dims % 2) throw ContractError("gradcheck dims must be even");
  const std::vector<std::string> names(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(experts));
  const data::SkillLayout layout(names);

  const auto corpus = data::generate_synthetic_corpus(seed, {40, 1, 1});
  auto fits = [&](const data::DialogueExample& e) {
    return std::all_of(e.skills.begin(), e.skills.end(), [&](const auto& s) { return layout.contains(s); });
  };
  // shortest fitting example keeps the summed loss small and the differences clean
  const data::DialogueExample* best = nullptr;
  for (const auto& e : corpus.data.train) {
    if (fits(e) && (!best || e.input_length() + e.target.size() < best->input_length() + best->target.size())) best = &e;
  }
  data::DialogueExample example = best ? *best : corpus.data.train.front();
  if (!best) example.skills = {names.front()};

  transformer::ModelConfig cfg;
  cfg.embedding_dim = cfg.model_dim = dims;
  cfg.heads = 2;
  cfg.head_depth = dims / 2;
  cfg.filter = dims + dims / 2;
  auto model = experts::DialogueModel::build(variant, cfg, {example}, layout, seed);
  const auto enc = model.encode(example);
  TrainConfig tc;
  model.params().zero_grad();
  autodiff::backward(example_loss(model, enc, tc).total);
  ModelGradCheck out;
  out.result = autodiff::check_gradients(
      model.params().entries(), [&] { return example_loss(model, enc, tc).total.item(); }, 3e-5, 0, true);
  out.parameters = model.params().element_count();
  for (const auto& [name, t] : model.params().entries()) out.tensors.push_back(name);
  return out;
}

}  // namespace aop::training
