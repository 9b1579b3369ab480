#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aop/autodiff/param_store.hpp"
#include "aop/autodiff/tensor.hpp"
#include "aop/rng.hpp"

namespace aop::transformer {

using autodiff::ParamStore;
using autodiff::Tensor;

// Vocabulary projection W plus the generate/copy switch
// p_gen = sigmoid(O w_o + ctx w_c + e_prev w_e + b).
struct OutputLayer {
  Tensor projection;    // [d x |V|]
  Tensor gate_state;    // [d x 1]
  Tensor gate_context;  // [d x 1]
  Tensor gate_input;    // [d x 1]
  Tensor gate_bias;     // [1]
};

OutputLayer make_output_layer(ParamStore& store, std::size_t d, std::size_t vocab, Rng& rng);

struct CopyInputs {
  Tensor encoded;          // H [n x d]
  Tensor cross_attention;  // [k x n], rows sum to 1
  Tensor previous;         // embeddings of the decoder inputs [k x d]
  std::span<const int> source_ext_ids;
  std::size_t ext_vocab = 0;  // |V| + number of source OOV tokens
  std::optional<double> forced_gate;  // fixes p_gen when set
};

struct OutputDistribution {
  Tensor probs;       // [k x ext_vocab], rows sum to 1
  Tensor vocab_probs; // softmax(O W) [k x |V|]
  Tensor gate;        // p_gen [k x 1]
};

OutputDistribution output_distribution(const Tensor& decoded, const OutputLayer& layer, const CopyInputs& copy);

// Greedy decoding. `step` maps the current prefix (starting with <SOS>) to the
// next-token distribution row; decoding stops at <EOS> or after `max_len`
// tokens. The returned ids exclude <SOS> and <EOS>.
std::vector<int> greedy_decode(const std::function<std::vector<double>(const std::vector<int>&)>& step,
                               std::size_t max_len);

}  // namespace aop::transformer
