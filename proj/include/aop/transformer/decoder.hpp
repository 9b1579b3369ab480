#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aop/rng.hpp"
#include "aop/transformer/config.hpp"
#include "aop/transformer/layers.hpp"

namespace aop::transformer {

// Where each named decoder weight lives inside the flat parameter vector.
class DecoderLayout {
 public:
  struct Entry {
    std::string name;
    autodiff::Shape shape;
    std::size_t offset;
    std::size_t size;
  };

  explicit DecoderLayout(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry& entry(const std::string& name) const;
  std::size_t size() const { return size_; }
  std::size_t layers() const { return cfg_.layers; }

  bool operator==(const DecoderLayout& other) const;

 private:
  void add(const std::string& name, autodiff::Shape shape);

  ModelConfig cfg_;
  std::vector<Entry> entries_;
  std::size_t size_ = 0;
};

struct DecoderLayerWeights {
  NormWeights norm_self;
  AttentionWeights self_attention;
  NormWeights norm_cross;
  AttentionWeights cross_attention;
  NormWeights norm_ffn;
  FeedForwardWeights ffn;
};

struct DecoderWeights {
  std::vector<DecoderLayerWeights> layers;
  NormWeights final_norm;
};

// A complete decoder parameterization stored as one rank-1 tensor. Linear
// combinations of decoders are linear combinations of these vectors, and the
// structured weights are views into it, so gradients reach the vector itself.
class DecoderParams {
 public:
  DecoderParams(std::shared_ptr<const DecoderLayout> layout, Tensor flat);

  // Glorot for projection matrices, ones for norm gains, zeros for biases.
  static DecoderParams initialize(std::shared_ptr<const DecoderLayout> layout, Rng& rng);
  static DecoderParams unflatten(std::shared_ptr<const DecoderLayout> layout, std::span<const double> values);

  std::vector<double> flatten() const;
  const Tensor& flat() const { return flat_; }
  const DecoderLayout& layout() const { return *layout_; }
  const std::shared_ptr<const DecoderLayout>& layout_ptr() const { return layout_; }

  DecoderWeights weights() const;

  // Differentiable vector-space operations.
  DecoderParams operator+(const DecoderParams& other) const;
  DecoderParams operator*(double s) const;

  bool operator==(const DecoderParams& other) const;

 private:
  std::shared_ptr<const DecoderLayout> layout_;
  Tensor flat_;
};

struct DecodeTrace {
  Tensor cross_attention;  // final layer, mean over heads, [k x n]
};

// One decoder pass: O = Dec_theta(target_embedded, H). Counts one decoder
// invocation.
Tensor decode(const DecoderParams& theta, const Tensor& target_embedded, const Tensor& encoded,
              DecodeTrace* trace = nullptr);

// Loops the single layer of `theta` `hops` times, then applies the final norm.
Tensor universal_decode(const DecoderParams& theta, const Tensor& target_embedded, const Tensor& encoded,
                        std::size_t hops, DecodeTrace* trace = nullptr);

}  // namespace aop::transformer
