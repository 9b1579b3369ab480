#include "aop/experts/moe.hpp"

#include <cmath>

#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"

namespace aop::experts {

namespace ad = aop::autodiff;
namespace tr = aop::transformer;

MoeWeights make_moe(ParamStore& store, const tr::ModelConfig& cfg, std::size_t experts, Rng& rng) {
  if (experts == 0) throw ContractError("MoE needs at least one expert");
  const std::size_t d = cfg.model_dim;
  MoeWeights w;
  w.encoder = make_gru(store, "moe.enc", d, d, rng);
  w.first = make_gru(store, "moe.dec1", d, d, rng);
  w.gate = store.glorot("moe.gate", {d, experts}, rng);
  for (std::size_t i = 0; i < experts; ++i) {
    w.experts.push_back(tr::make_feed_forward(store, "moe.expert" + std::to_string(i), cfg, rng));
  }
  w.second = make_gru(store, "moe.dec2", d, d, rng);
  return w;
}

MoeResult moe_forward(const TransformerCore& core, const MoeWeights& w, const ForwardInput& in,
                      const Tensor* forced_gate) {
  const std::size_t r = w.experts.size();
  const Tensor h = gru_scan(w.encoder, tr::embed_input(in.source, core.tables));
  const Tensor y = tr::embed_target(in.target_in, core.tables);
  const Tensor s1 = gru_scan(w.first, y, ad::row(h, h.rows() - 1));
  const std::size_t k = s1.rows();

  Tensor gate;
  if (forced_gate) {
    if (forced_gate->size() != r) throw ContractError("forced gate needs one weight per expert");
    for (double g : forced_gate->data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gate weight");
    }
    const Tensor ones = Tensor::full({k, 1}, 1.0);
    gate = ad::matmul(ones, ad::reshape(*forced_gate, {1, r}));
  } else {
    gate = ad::softmax(ad::matmul(s1, w.gate), 1);
  }

  Tensor mixed;
  for (std::size_t i = 0; i < r; ++i) {
    const Tensor term = ad::mul_col(tr::feed_forward(s1, w.experts[i]), ad::slice_cols(gate, i, i + 1));
    mixed = mixed.defined() ? ad::add(mixed, term) : term;
  }
  const Tensor s2 = gru_scan(w.second, mixed);
  const Tensor attention = ad::softmax(ad::matmul_nt(s2, h), 1);
  const Tensor decoded = ad::add(s2, ad::matmul(attention, h));
  auto out = tr::output_distribution(decoded, core.output,
                                     {h, attention, y, in.source_ext_ids, in.ext_vocab, std::nullopt});
  return {out.probs, gate};
}

}  // namespace aop::experts
