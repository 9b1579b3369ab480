#pragma once

#include <cstddef>
#include <string>

namespace aop::transformer {

// Model dimensions. `head_depth` is the per-head key/value width and `filter`
// the feed-forward inner width.
struct ModelConfig {
  std::size_t embedding_dim = 64;  // d
  std::size_t model_dim = 64;      // d_model
  std::size_t layers = 1;
  std::size_t heads = 2;
  std::size_t head_depth = 16;
  std::size_t filter = 128;
  std::size_t experts = 4;
  std::size_t hops = 1;  // > 1 loops the single decoder layer (universal variant)
  double layer_norm_eps = 1e-6;

  std::size_t attention_depth() const { return heads * head_depth; }

  // Throws ContractError on an inconsistent configuration.
  void validate() const;

  // d = d_model = 64, 2 heads of depth 16, filter 128, 4 experts.
  static ModelConfig desk();
  // d = d_model = 300, 2 heads of depth 40, filter 50, 13 experts.
  static ModelConfig full();
  static ModelConfig preset(const std::string& name);
};

}  // namespace aop::transformer
