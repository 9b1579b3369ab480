#include "aop/transformer/layers.hpp"

#include <cmath>

#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"

namespace aop::transformer {

namespace ad = aop::autodiff;

NormWeights make_norm(ParamStore& store, const std::string& prefix, std::size_t width) {
  return {store.ones(prefix + ".gain", {width}), store.zeros(prefix + ".bias", {width})};
}

AttentionWeights make_attention(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
  const std::size_t d = cfg.model_dim, a = cfg.attention_depth();
  return {store.glorot(prefix + ".wq", {d, a}, rng), store.glorot(prefix + ".wk", {d, a}, rng),
          store.glorot(prefix + ".wv", {d, a}, rng), store.glorot(prefix + ".wo", {a, d}, rng)};
}

FeedForwardWeights make_feed_forward(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
  return {store.glorot(prefix + ".w1", {cfg.model_dim, cfg.filter}, rng), store.zeros(prefix + ".b1", {cfg.filter}),
          store.glorot(prefix + ".w2", {cfg.filter, cfg.model_dim}, rng), store.zeros(prefix + ".b2", {cfg.model_dim})};
}

Tensor apply_norm(const Tensor& x, const NormWeights& w, double eps) { return ad::layer_norm(x, w.gain, w.bias, eps); }

Tensor multi_head_attention(const Tensor& queries, const Tensor& memory, const AttentionWeights& w,
                            const ModelConfig& cfg, bool causal, Tensor* mean_weights) {
  if (causal && queries.rows() != memory.rows()) throw DimensionError("causal attention needs square scores");
  const Tensor q = ad::matmul(queries, w.wq);
  const Tensor k = ad::matmul(memory, w.wk);
  const Tensor v = ad::matmul(memory, w.wv);
  const double s = 1.0 / std::sqrt(static_cast<double>(cfg.head_depth));

  std::vector<Tensor> outputs;
  Tensor weight_total;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t lo = h * cfg.head_depth, hi = lo + cfg.head_depth;
    const bool whole = cfg.heads == 1;
    const Tensor qh = whole ? q : ad::slice_cols(q, lo, hi);
    const Tensor kh = whole ? k : ad::slice_cols(k, lo, hi);
    const Tensor vh = whole ? v : ad::slice_cols(v, lo, hi);
    Tensor scores = ad::scale(ad::matmul_nt(qh, kh), s);
    if (causal) scores = ad::causal_mask(scores);
    const Tensor weights = ad::softmax(scores, 1);
    outputs.push_back(ad::matmul(weights, vh));
    if (mean_weights) weight_total = weight_total.defined() ? ad::add(weight_total, weights) : weights;
  }
  if (mean_weights) *mean_weights = cfg.heads == 1 ? weight_total : ad::scale(weight_total, 1.0 / cfg.heads);
  const Tensor joined = outputs.size() == 1 ? outputs.front() : ad::concat_cols(outputs);
  return ad::matmul(joined, w.wo);
}

Tensor feed_forward(const Tensor& x, const FeedForwardWeights& w) {
  const Tensor hidden = ad::relu(ad::add_row(ad::matmul(x, w.w1), w.b1));
  return ad::add_row(ad::matmul(hidden, w.w2), w.b2);
}

Tensor positional_encoding(std::size_t n, std::size_t d) {
  std::vector<double> pe(n * d);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      pe[pos * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from_data({n, d}, std::move(pe));
}

EmbeddingTables make_embeddings(ParamStore& store, std::size_t vocab, std::size_t tags, std::size_t d, Rng& rng) {
  return {store.uniform("embed.words", {vocab, d}, 0.1, rng), store.uniform("embed.tags", {tags, d}, 0.1, rng)};
}

Tensor embed_input(const EncoderInput& input, const EmbeddingTables& tables) {
  const std::size_t n = input.tokens.size();
  if (n == 0) throw DimensionError("empty encoder input");
  if (input.types.size() != n || input.segments.size() != n) {
    throw DimensionError("token, type and segment sequences differ in length");
  }
  const Tensor words = ad::gather_rows(tables.words, input.tokens);
  const Tensor pe = positional_encoding(n, tables.words.cols());
  const Tensor tags = ad::add(ad::gather_rows(tables.tags, input.types), ad::gather_rows(tables.tags, input.segments));
  return ad::add(ad::add(words, pe), tags);
}

Tensor embed_target(std::span<const int> ids, const EmbeddingTables& tables) {
  if (ids.empty()) throw DimensionError("empty decoder input");
  return ad::add(ad::gather_rows(tables.words, ids), positional_encoding(ids.size(), tables.words.cols()));
}

EncoderWeights make_encoder(ParamStore& store, const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
  EncoderWeights w;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = prefix + ".l" + std::to_string(l);
    EncoderLayerWeights layer;
    layer.norm_attention = make_norm(store, p + ".ln1", cfg.model_dim);
    layer.attention = make_attention(store, p + ".self", cfg, rng);
    layer.norm_ffn = make_norm(store, p + ".ln2", cfg.model_dim);
    layer.ffn = make_feed_forward(store, p + ".ffn", cfg, rng);
    w.layers.push_back(std::move(layer));
  }
  w.final_norm = make_norm(store, prefix + ".ln", cfg.model_dim);
  return w;
}

Tensor encode(const Tensor& embedded, const EncoderWeights& w, const ModelConfig& cfg) {
  if (embedded.cols() != cfg.model_dim) throw DimensionError("encoder input width differs from d_model");
  Tensor x = embedded;
  for (const auto& layer : w.layers) {
    const Tensor a = apply_norm(x, layer.norm_attention, cfg.layer_norm_eps);
    x = ad::add(x, multi_head_attention(a, a, layer.attention, cfg, false));
    x = ad::add(x, feed_forward(apply_norm(x, layer.norm_ffn, cfg.layer_norm_eps), layer.ffn));
  }
  return apply_norm(x, w.final_norm, cfg.layer_norm_eps);
}

}  // namespace aop::transformer
