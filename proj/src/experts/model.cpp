#include "aop/experts/model.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>

#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"
#include "aop/transformer/checkpoint.hpp"
#include "json.hpp"

namespace aop::experts {

namespace ad = aop::autodiff;
namespace tr = aop::transformer;
using nlohmann::json;

namespace {

const std::vector<std::pair<Variant, std::string>>& variant_names() {
  static const std::vector<std::pair<Variant, std::string>> names = {
      {Variant::Trs, "TRS"},       {Variant::TrsU, "TRS+U"},      {Variant::Moe, "MoE"},
      {Variant::Aor, "AoR"},       {Variant::Aop, "AoP"},         {Variant::AopU, "AoP+U"},
      {Variant::AopNoLv, "AoP-noLV"}, {Variant::AopOracle, "AoP-O"}};
  return names;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

json config_json(const tr::ModelConfig& c) {
  return {{"embedding_dim", c.embedding_dim}, {"model_dim", c.model_dim}, {"layers", c.layers},
          {"heads", c.heads},                 {"head_depth", c.head_depth}, {"filter", c.filter},
          {"experts", c.experts},             {"hops", c.hops},           {"layer_norm_eps", c.layer_norm_eps}};
}

tr::ModelConfig config_from_json(const json& j) {
  tr::ModelConfig c;
  c.embedding_dim = j.at("embedding_dim");
  c.model_dim = j.at("model_dim");
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.head_depth = j.at("head_depth");
  c.filter = j.at("filter");
  c.experts = j.at("experts");
  c.hops = j.at("hops");
  c.layer_norm_eps = j.at("layer_norm_eps");
  return c;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  const std::string key = lower(name);
  for (const auto& [v, n] : variant_names()) {
    if (lower(n) == key) return v;
  }
  // accepted spellings beyond the canonical ones
  if (key == "aop+o" || key == "aop-oracle") return Variant::AopOracle;
  if (key == "aop-nolv" || key == "aop_nolv" || key == "aop w/o lv") return Variant::AopNoLv;
  throw LookupError("unknown model variant " + name);
}

std::string variant_name(Variant v) {
  for (const auto& [variant, n] : variant_names()) {
    if (variant == v) return n;
  }
  throw ContractError("unknown variant");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> out;
    for (const auto& [v, n] : variant_names()) out.push_back(v);
    return out;
  }();
  return all;
}

bool has_expert_bank(Variant v) {
  return v == Variant::Aor || v == Variant::Aop || v == Variant::AopU || v == Variant::AopNoLv ||
         v == Variant::AopOracle;
}

bool has_skill_loss(Variant v) { return v == Variant::Aor || v == Variant::Aop || v == Variant::AopU; }

bool is_universal(Variant v) { return v == Variant::TrsU || v == Variant::AopU; }

DialogueModel::DialogueModel(Variant variant, tr::ModelConfig cfg, tr::Vocab words, tr::Vocab tags,
                             data::SkillLayout skills, std::uint64_t seed, ModelOptions options)
    : variant_(variant),
      words_(std::move(words)),
      tags_(std::move(tags)),
      skills_(std::move(skills)),
      options_(options),
      store_(std::make_unique<ParamStore>()) {
  if (!is_universal(variant)) cfg.hops = 1;
  cfg.experts = skills_.size();
  cfg.validate();
  core_.cfg = cfg;

  Rng rng(seed);
  const std::size_t d = cfg.model_dim;
  core_.tables = tr::make_embeddings(*store_, words_.size(), tags_.size(), d, rng);
  if (variant != Variant::Moe) core_.encoder = tr::make_encoder(*store_, "enc", cfg, rng);
  core_.output = tr::make_output_layer(*store_, d, words_.size(), rng);

  auto layout = std::make_shared<const tr::DecoderLayout>(cfg);
  if (variant == Variant::Trs || variant == Variant::TrsU) {
    decoder_ = DecoderParams::initialize(layout, rng);
    store_->add("decoder", decoder_->flat());
  } else if (variant == Variant::Moe) {
    moe_ = make_moe(*store_, cfg, skills_.size(), rng);
  } else {
    bank_ = make_expert_bank(*store_, layout, skills_.names(), rng);
    query_ = make_query_encoder(*store_, "query", d, rng);
  }
}

DialogueModel DialogueModel::build(Variant variant, tr::ModelConfig cfg,
                                   const std::vector<data::DialogueExample>& train, const data::SkillLayout& skills,
                                   std::uint64_t seed, ModelOptions options) {
  if (train.empty()) throw ContractError("cannot build a vocabulary from an empty training split");
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  auto count = [&](const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
      if (counts[t]++ == 0) order.push_back(t);
    }
  };
  auto words = tr::Vocab::words();
  auto tags = tr::Vocab::tags();
  for (const auto& e : train) {
    count(e.history);
    count(e.memory);
    count(e.target);
    for (const auto& t : e.types) tags.add(t);
    for (const auto& s : e.segments) tags.add(s);
  }
  for (const auto& t : order) {
    if (counts[t] >= options.min_count) words.add(t);
  }
  if (is_universal(variant) && cfg.hops == 1) cfg.hops = 6;
  return DialogueModel(variant, cfg, std::move(words), std::move(tags), skills, seed, options);
}

const ExpertBank& DialogueModel::bank() const {
  if (!bank_) throw ContractError(variant_name(variant_) + " has no expert bank");
  return *bank_;
}

const QueryEncoder& DialogueModel::query_encoder() const {
  if (!query_) throw ContractError(variant_name(variant_) + " has no query encoder");
  return *query_;
}

const MoeWeights& DialogueModel::moe() const {
  if (!moe_) throw ContractError(variant_name(variant_) + " is not a mixture of experts");
  return *moe_;
}

const DecoderParams& DialogueModel::decoder() const {
  if (!decoder_) throw ContractError(variant_name(variant_) + " has no single decoder");
  return *decoder_;
}

EncodedExample DialogueModel::encode(const data::DialogueExample& example) const {
  EncodedExample out;
  out.id = example.id;
  std::vector<std::string> tokens = example.history;
  tokens.insert(tokens.end(), example.memory.begin(), example.memory.end());
  if (tokens.empty()) throw ContractError("example " + example.id + " has no input tokens");
  if (example.types.size() != tokens.size() || example.segments.size() != tokens.size()) {
    throw DimensionError("example " + example.id + " needs one type and segment per input token");
  }
  out.source_ids = tr::encode_source(words_, tokens);
  out.source.tokens = out.source_ids.ids;
  for (const auto& t : example.types) out.source.types.push_back(tags_.id(t));
  for (const auto& s : example.segments) out.source.segments.push_back(tags_.id(s));
  out.ext_vocab = out.source_ids.ext_vocab_size(words_);

  const auto target = tr::encode_target(words_, out.source_ids, example.target);
  const int vocab = static_cast<int>(words_.size());
  out.target_in.push_back(tr::kSos);
  for (int id : target) out.target_in.push_back(id >= vocab ? tr::kUnk : id);
  out.target_out = target;
  out.target_out.push_back(tr::kEos);
  out.skills = skills_.encode(example.skills);
  return out;
}

Tensor DialogueModel::expert_weights(const EncodedExample& ex, const Tensor& encoded, const Tensor* alpha,
                                     Tensor* logits) const {
  if (alpha) {
    if (alpha->size() != skills_.size()) throw ContractError("mixing weights need one entry per skill");
    return ad::reshape(*alpha, {1, skills_.size()});
  }
  if (variant_ == Variant::AopOracle) return oracle_attention(ex.skills, options_.normalize_oracle);
  auto outcome = attention_scores(compute_query(*query_, encoded), bank_->keys);
  if (logits) *logits = outcome.logits;
  return outcome.alpha;
}

ModelOutput DialogueModel::forward(const EncodedExample& ex, const Tensor* alpha) const {
  const ForwardInput in{ex.source, ex.target_in, ex.source_ids.ext_ids, ex.ext_vocab};
  ModelOutput out;
  if (moe_) {
    auto r = moe_forward(core_, *moe_, in, alpha);
    out.probs = r.probs;
    out.mixing = r.gate;
    return out;
  }
  if (decoder_) {
    out.probs = single_forward(core_, *decoder_, in).probs;
    return out;
  }
  ForwardResult r;
  if (variant_ == Variant::AopOracle && !alpha) {
    const Tensor gold = oracle_attention(ex.skills, options_.normalize_oracle);
    r = aop_forward(core_, *bank_, *query_, in, &gold);
  } else if (variant_ == Variant::Aor) {
    r = aor_forward(core_, *bank_, *query_, in, alpha);
  } else {
    r = aop_forward(core_, *bank_, *query_, in, alpha);
  }
  out.probs = r.probs;
  out.mixing = r.mixing;
  if (r.attention) out.logits = r.attention->logits;
  return out;
}

AttentionOutcome DialogueModel::attention(const EncodedExample& ex) const {
  if (!query_ || variant_ == Variant::AopOracle) {
    throw ContractError(variant_name(variant_) + " has no learned skill attention");
  }
  return attention_scores(compute_query(*query_, encode_source(core_, ex.source)), bank_->keys);
}

std::vector<std::string> DialogueModel::generate(const data::DialogueExample& example, std::size_t max_len,
                                                 const Tensor* alpha) const {
  ad::NoGradGuard guard;
  const EncodedExample ex = encode(example);
  const int vocab = static_cast<int>(words_.size());
  auto embed_ids = [&](const std::vector<int>& prefix) {
    std::vector<int> ids(prefix);
    for (auto& id : ids) {
      if (id >= vocab) id = tr::kUnk;
    }
    return ids;
  };
  auto last_row = [](const Tensor& probs) {
    const std::size_t cols = probs.cols(), r = probs.rows() - 1;
    const auto& data = probs.data();
    return std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                               data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  };

  std::function<std::vector<double>(const std::vector<int>&)> step;
  std::optional<DecoderParams> mixed;
  Tensor encoded, weights;
  if (moe_) {
    step = [&](const std::vector<int>& prefix) {
      const auto ids = embed_ids(prefix);
      const ForwardInput in{ex.source, ids, ex.source_ids.ext_ids, ex.ext_vocab};
      return last_row(moe_forward(core_, *moe_, in, alpha).probs);
    };
  } else {
    encoded = encode_source(core_, ex.source);
    std::vector<const DecoderParams*> decoders;
    if (decoder_) {
      decoders.push_back(&*decoder_);
    } else {
      weights = expert_weights(ex, encoded, alpha, nullptr);
      if (variant_ == Variant::Aor) {
        for (const auto& e : bank_->experts) decoders.push_back(&e);
      } else {
        mixed = mix_parameters(*bank_, weights);
        decoders.push_back(&*mixed);
      }
    }
    step = [&, decoders](const std::vector<int>& prefix) {
      const auto ids = embed_ids(prefix);
      const Tensor y = tr::embed_target(ids, core_.tables);
      Tensor o, cross;
      if (decoders.size() == 1) {
        tr::DecodeTrace trace;
        o = run_decoder(core_, *decoders.front(), y, encoded, &trace);
        cross = trace.cross_attention;
      } else {
        std::vector<Tensor> outs, crosses;
        for (const auto* theta : decoders) {
          tr::DecodeTrace trace;
          outs.push_back(run_decoder(core_, *theta, y, encoded, &trace));
          crosses.push_back(trace.cross_attention);
        }
        o = ad::weighted_sum(outs, weights);
        double total = 0;
        for (double w : weights.data()) total += w;
        cross = ad::scale(ad::weighted_sum(crosses, weights), 1.0 / total);
      }
      const auto dist = tr::output_distribution(
          o, core_.output, {encoded, cross, y, ex.source_ids.ext_ids, ex.ext_vocab, std::nullopt});
      return last_row(dist.probs);
    };
  }

  std::vector<std::string> out;
  for (int id : tr::greedy_decode(step, max_len)) out.push_back(tr::decode_token(words_, ex.source_ids, id));
  return out;
}

void DialogueModel::save(const std::filesystem::path& path) const {
  const json meta = {{"variant", variant_name(variant_)},
                     {"config", config_json(core_.cfg)},
                     {"words", words_.tokens()},
                     {"tags", tags_.tokens()},
                     {"skills", skills_.names()},
                     {"min_count", options_.min_count},
                     {"normalize_oracle", options_.normalize_oracle}};
  tr::save_checkpoint(path, tr::Checkpoint::from_store(*store_, meta.dump()));
}

DialogueModel DialogueModel::load(const std::filesystem::path& path) {
  const auto ckpt = tr::load_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
  try {
    ModelOptions options;
    options.min_count = meta.at("min_count");
    options.normalize_oracle = meta.at("normalize_oracle");
    DialogueModel model(parse_variant(meta.at("variant")), config_from_json(meta.at("config")),
                        tr::Vocab::from_tokens(meta.at("words"), tr::kUnk), tr::Vocab::from_tokens(meta.at("tags"), 0),
                        data::SkillLayout(meta.at("skills").get<std::vector<std::string>>()), 0, options);
    ckpt.load_into(*model.store_);
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
}

void DialogueModel::write_attention(std::ostream& out, const std::vector<data::DialogueExample>& examples) const {
  ad::NoGradGuard guard;
  for (const auto& e : examples) {
    const auto ex = encode(e);
    Tensor weights;
    if (moe_) {
      // per-step gates averaged over the target
      const auto r = forward(ex);
      weights = ad::scale(ad::matmul(Tensor::full({1, r.mixing.rows()}, 1.0), r.mixing), 1.0 / r.mixing.rows());
    } else if (bank_) {
      weights = expert_weights(ex, encode_source(core_, ex.source), nullptr, nullptr);
    } else {
      throw ContractError(variant_name(variant_) + " does not weight experts");
    }
    out << e.id;
    for (double w : weights.data()) out << ',' << w;
    out << '\n';
  }
}

}  // namespace aop::experts
