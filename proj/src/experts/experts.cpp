#include "aop/experts/experts.hpp"

#include <algorithm>
#include <cmath>

#include "aop/autodiff/op_counter.hpp"
#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"

namespace aop::experts {

namespace ad = aop::autodiff;
namespace tr = aop::transformer;

QueryEncoder make_query_encoder(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng) {
  return {make_gru(store, prefix, d, d, rng)};
}

Tensor compute_query(const QueryEncoder& enc, const Tensor& encoded) {
  if (!encoded.defined() || encoded.rows() == 0) throw ContractError("query encoder needs at least one position");
  const Tensor states = gru_scan(enc.gru, encoded);
  return ad::row(states, states.rows() - 1);
}

AttentionOutcome attention_scores(const Tensor& q, const Tensor& keys) {
  const Tensor logits = ad::matmul(q, keys);
  return {logits, ad::softmax(logits, 1)};
}

void ExpertBank::validate() const {
  if (experts.empty()) throw ContractError("expert bank is empty");
  if (skills.size() != experts.size()) throw ContractError("one skill name per expert");
  if (keys.defined() && keys.cols() != experts.size()) throw DimensionError("key matrix needs one column per expert");
  for (const auto& e : experts) {
    if (!(e.layout() == experts.front().layout())) throw DimensionError("experts have different shapes");
  }
}

ExpertBank make_expert_bank(ParamStore& store, std::shared_ptr<const tr::DecoderLayout> layout,
                            const std::vector<std::string>& skills, Rng& rng) {
  ExpertBank bank;
  bank.skills = skills;
  for (const auto& s : skills) {
    auto theta = DecoderParams::initialize(layout, rng);
    store.add("expert." + s, theta.flat());
    bank.experts.push_back(std::move(theta));
  }
  bank.keys = store.glorot("experts.keys", {layout->config().model_dim, skills.size()}, rng);
  bank.validate();
  return bank;
}

DecoderParams mix_parameters(const ExpertBank& bank, const Tensor& alpha) {
  if (alpha.size() != bank.size()) {
    throw ContractError("mixing weights have " + std::to_string(alpha.size()) + " entries for " +
                        std::to_string(bank.size()) + " experts");
  }
  for (double a : alpha.data()) {
    if (!std::isfinite(a)) throw NumericError("non-finite mixing weight");
  }
  std::vector<Tensor> flats;
  flats.reserve(bank.size());
  for (const auto& e : bank.experts) flats.push_back(e.flat());
  ad::count_param_sum(bank.size() * bank.experts.front().layout().size());
  return DecoderParams(bank.experts.front().layout_ptr(), ad::weighted_sum(flats, alpha));
}

Tensor oracle_attention(std::span<const double> skill_vector, bool normalize) {
  double total = 0;
  for (double v : skill_vector) {
    if (v != 0.0 && v != 1.0) throw ContractError("skill vectors are binary");
    total += v;
  }
  if (total == 0) throw ContractError("oracle attention needs at least one active skill");
  std::vector<double> w(skill_vector.begin(), skill_vector.end());
  if (normalize) {
    for (auto& x : w) x /= total;
  }
  const std::size_t r = w.size();
  return Tensor::from_data({1, r}, std::move(w));
}

Tensor manual_attention(const std::vector<std::string>& bank_skills, const std::vector<std::string>& names,
                        bool normalize) {
  if (names.empty()) throw ContractError("select at least one skill");
  std::vector<double> bits(bank_skills.size(), 0.0);
  for (const auto& name : names) {
    auto it = std::find(bank_skills.begin(), bank_skills.end(), name);
    if (it == bank_skills.end()) throw LookupError("skill " + name + " is not part of this model");
    bits[static_cast<std::size_t>(it - bank_skills.begin())] = 1.0;
  }
  return oracle_attention(bits, normalize);
}

Tensor encode_source(const TransformerCore& core, const tr::EncoderInput& source) {
  return tr::encode(tr::embed_input(source, core.tables), core.encoder, core.cfg);
}

Tensor run_decoder(const TransformerCore& core, const DecoderParams& theta, const Tensor& target_embedded,
                   const Tensor& encoded, tr::DecodeTrace* trace) {
  if (core.cfg.hops > 1) return tr::universal_decode(theta, target_embedded, encoded, core.cfg.hops, trace);
  return tr::decode(theta, target_embedded, encoded, trace);
}

namespace {

Tensor distribution(const TransformerCore& core, const Tensor& decoded, const Tensor& encoded, const Tensor& cross,
                    const Tensor& target_embedded, const ForwardInput& in) {
  return tr::output_distribution(decoded, core.output,
                                 {encoded, cross, target_embedded, in.source_ext_ids, in.ext_vocab, std::nullopt})
      .probs;
}

// Softmax attention from the query encoder unless explicit weights are given.
std::pair<Tensor, std::optional<AttentionOutcome>> mixing_weights(const ExpertBank& bank, const QueryEncoder& enc,
                                                                  const Tensor& encoded, const Tensor* alpha) {
  if (alpha) {
    if (alpha->size() != bank.size()) throw ContractError("mixing weights need one entry per expert");
    return {*alpha, std::nullopt};
  }
  auto outcome = attention_scores(compute_query(enc, encoded), bank.keys);
  return {outcome.alpha, outcome};
}

}  // namespace

ForwardResult single_forward(const TransformerCore& core, const DecoderParams& theta, const ForwardInput& in) {
  const Tensor h = encode_source(core, in.source);
  const Tensor y = tr::embed_target(in.target_in, core.tables);
  tr::DecodeTrace trace;
  const Tensor o = run_decoder(core, theta, y, h, &trace);
  return {distribution(core, o, h, trace.cross_attention, y, in), Tensor(), std::nullopt};
}

ForwardResult aop_forward(const TransformerCore& core, const ExpertBank& bank, const QueryEncoder& enc,
                          const ForwardInput& in, const Tensor* alpha) {
  const Tensor h = encode_source(core, in.source);
  auto [weights, outcome] = mixing_weights(bank, enc, h, alpha);
  const DecoderParams mixed = mix_parameters(bank, weights);
  const Tensor y = tr::embed_target(in.target_in, core.tables);
  tr::DecodeTrace trace;
  const Tensor o = run_decoder(core, mixed, y, h, &trace);
  return {distribution(core, o, h, trace.cross_attention, y, in), weights, outcome};
}

ForwardResult aor_forward(const TransformerCore& core, const ExpertBank& bank, const QueryEncoder& enc,
                          const ForwardInput& in, const Tensor* alpha) {
  const Tensor h = encode_source(core, in.source);
  auto [weights, outcome] = mixing_weights(bank, enc, h, alpha);
  const Tensor y = tr::embed_target(in.target_in, core.tables);
  std::vector<Tensor> outputs, crosses;
  for (const auto& theta : bank.experts) {
    tr::DecodeTrace trace;
    outputs.push_back(run_decoder(core, theta, y, h, &trace));
    crosses.push_back(trace.cross_attention);
  }
  const Tensor o = ad::weighted_sum(outputs, weights);
  // copy attention stays a distribution when the weights do not sum to one
  double total = 0;
  for (double w : weights.data()) total += w;
  Tensor cross = ad::weighted_sum(crosses, weights);
  if (alpha && total != 1.0) cross = ad::scale(cross, 1.0 / total);
  return {distribution(core, o, h, cross, y, in), weights, outcome};
}

}  // namespace aop::experts
