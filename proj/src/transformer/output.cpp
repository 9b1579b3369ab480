#include "aop/transformer/output.hpp"

#include <algorithm>

#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"
#include "aop/transformer/vocab.hpp"

namespace aop::transformer {

namespace ad = aop::autodiff;

OutputLayer make_output_layer(ParamStore& store, std::size_t d, std::size_t vocab, Rng& rng) {
  return {store.glorot("out.projection", {d, vocab}, rng), store.glorot("out.gate_state", {d, 1}, rng),
          store.glorot("out.gate_context", {d, 1}, rng), store.glorot("out.gate_input", {d, 1}, rng),
          store.zeros("out.gate_bias", {1})};
}

OutputDistribution output_distribution(const Tensor& decoded, const OutputLayer& layer, const CopyInputs& copy) {
  const std::size_t k = decoded.rows(), n = copy.encoded.rows(), vocab = layer.projection.cols();
  if (copy.cross_attention.rows() != k || copy.cross_attention.cols() != n) {
    throw DimensionError("copy attention must be [target x source]");
  }
  if (copy.source_ext_ids.size() != n) throw DimensionError("one extended id per source position");
  if (copy.ext_vocab < vocab) throw DimensionError("extended vocabulary smaller than the word vocabulary");

  OutputDistribution out;
  out.vocab_probs = ad::softmax(ad::matmul(decoded, layer.projection), 1);
  const Tensor generated = ad::pad_cols(out.vocab_probs, copy.ext_vocab);
  const Tensor copied = ad::scatter_cols(copy.cross_attention, copy.source_ext_ids, copy.ext_vocab);

  if (copy.forced_gate) {
    const double g = *copy.forced_gate;
    if (g < 0.0 || g > 1.0) throw ContractError("forced p_gen must lie in [0, 1]");
    out.gate = Tensor::full({k, 1}, g);
    out.probs = ad::add(ad::scale(generated, g), ad::scale(copied, 1.0 - g));
    return out;
  }

  const Tensor context = ad::matmul(copy.cross_attention, copy.encoded);
  Tensor logit = ad::add(ad::matmul(decoded, layer.gate_state), ad::matmul(context, layer.gate_context));
  logit = ad::add(logit, ad::matmul(copy.previous, layer.gate_input));
  out.gate = ad::sigmoid(ad::add_row(logit, layer.gate_bias));
  out.probs = ad::add(ad::mul_col(generated, out.gate), ad::mul_col(copied, ad::one_minus(out.gate)));
  return out;
}

std::vector<int> greedy_decode(const std::function<std::vector<double>(const std::vector<int>&)>& step,
                               std::size_t max_len) {
  std::vector<int> prefix = {kSos};
  std::vector<int> out;
  while (out.size() < max_len) {
    const auto probs = step(prefix);
    if (probs.empty()) throw DimensionError("empty next-token distribution");
    const int next = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    if (next == kEos) break;
    out.push_back(next);
    prefix.push_back(next);
  }
  return out;
}

}  // namespace aop::transformer
