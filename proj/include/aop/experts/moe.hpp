#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aop/experts/experts.hpp"
#include "aop/experts/gru.hpp"
#include "aop/transformer/layers.hpp"

namespace aop::experts {

// Recurrent seq2seq with r feed-forward experts between two GRU decoder layers.
//   H  = GRU_enc(X)
//   S1 = GRU_1(Y, h0 = H_n)
//   g  = softmax(S1 G)             per step, [k x r]
//   E  = sum_i g_i * FFN_i(S1)
//   S2 = GRU_2(E)
//   A  = softmax(S2 H^T), O = S2 + A H
struct MoeWeights {
  GruWeights encoder;
  GruWeights first;
  Tensor gate;  // [d x r]
  std::vector<transformer::FeedForwardWeights> experts;
  GruWeights second;
};

MoeWeights make_moe(ParamStore& store, const transformer::ModelConfig& cfg, std::size_t experts, Rng& rng);

struct MoeResult {
  Tensor probs;
  Tensor gate;  // [k x r] weights actually used
};

// `forced_gate` ([1 x r]) replaces the learned per-step gate on every step.
MoeResult moe_forward(const TransformerCore& core, const MoeWeights& w, const ForwardInput& in,
                      const Tensor* forced_gate = nullptr);

}  // namespace aop::experts
