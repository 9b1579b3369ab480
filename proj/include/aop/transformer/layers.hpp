#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aop/autodiff/param_store.hpp"
#include "aop/autodiff/tensor.hpp"
#include "aop/rng.hpp"
#include "aop/transformer/config.hpp"

namespace aop::transformer {

using autodiff::ParamStore;
using autodiff::Tensor;

struct NormWeights {
  Tensor gain;
  Tensor bias;
};

// Projections for multi-head attention. Heads are column blocks of wq/wk/wv.
struct AttentionWeights {
  Tensor wq;  // [d_model x heads*depth]
  Tensor wk;
  Tensor wv;
  Tensor wo;  // [heads*depth x d_model]
};

struct FeedForwardWeights {
  Tensor w1;  // [d_model x filter]
  Tensor b1;
  Tensor w2;  // [filter x d_model]
  Tensor b2;
};

NormWeights make_norm(ParamStore& store, const std::string& prefix, std::size_t width);
AttentionWeights make_attention(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng);
FeedForwardWeights make_feed_forward(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng);

Tensor apply_norm(const Tensor& x, const NormWeights& w, double eps);

// Scaled dot-product attention of `queries` [k x d] over `memory` [n x d].
// With `causal`, position i only sees memory positions <= i. If `mean_weights`
// is given it receives the attention matrix [k x n] averaged over heads.
Tensor multi_head_attention(const Tensor& queries, const Tensor& memory, const AttentionWeights& w,
                            const ModelConfig& cfg, bool causal, Tensor* mean_weights = nullptr);

Tensor feed_forward(const Tensor& x, const FeedForwardWeights& w);

// Sinusoidal position table [n x d]; constant.
Tensor positional_encoding(std::size_t n, std::size_t d);

// Word table E [|V| x d] and one tag table shared by token types and
// dialogue segments.
struct EmbeddingTables {
  Tensor words;
  Tensor tags;
};

EmbeddingTables make_embeddings(ParamStore& store, std::size_t vocab, std::size_t tags, std::size_t d, Rng& rng);

// Token ids plus per-token type and segment tags, all the same length.
struct EncoderInput {
  std::vector<int> tokens;
  std::vector<int> types;
  std::vector<int> segments;
};

// E[x] + PE + P[types] + P[segments], [n x d].
Tensor embed_input(const EncoderInput& input, const EmbeddingTables& tables);
// E[y] + PE for decoder inputs.
Tensor embed_target(std::span<const int> ids, const EmbeddingTables& tables);

struct EncoderLayerWeights {
  NormWeights norm_attention;
  AttentionWeights attention;
  NormWeights norm_ffn;
  FeedForwardWeights ffn;
};

struct EncoderWeights {
  std::vector<EncoderLayerWeights> layers;
  NormWeights final_norm;
};

EncoderWeights make_encoder(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng);

// Pre-norm Transformer encoder. Returns H [n x d_model].
Tensor encode(const Tensor& embedded, const EncoderWeights& w, const ModelConfig& cfg);

}  // namespace aop::transformer
