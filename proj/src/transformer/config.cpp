#include "aop/transformer/config.hpp"

#include "aop/errors.hpp"

namespace aop::transformer {

void ModelConfig::validate() const {
  if (embedding_dim != model_dim) throw ContractError("embedding size d must equal d_model");
  if (model_dim == 0 || heads == 0 || head_depth == 0 || filter == 0 || layers == 0) {
    throw ContractError("model dimensions must be positive");
  }
  if (experts == 0) throw ContractError("need at least one expert");
  if (hops == 0) throw ContractError("hops must be >= 1");
  if (hops > 1 && layers != 1) throw ContractError("universal decoding loops a single layer; set layers = 1");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.embedding_dim = 300;
  c.model_dim = 300;
  c.layers = 1;
  c.heads = 2;
  c.head_depth = 40;
  c.filter = 50;
  c.experts = 13;
  return c;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return full();
  throw ContractError("unknown preset: " + name);
}

}  // namespace aop::transformer
