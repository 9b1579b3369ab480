#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aop/experts/gru.hpp"
#include "aop/transformer/decoder.hpp"
#include "aop/transformer/layers.hpp"
#include "aop/transformer/output.hpp"

namespace aop::experts {

using transformer::DecoderParams;

// Final hidden state of a GRU scan over H.
struct QueryEncoder {
  GruWeights gru;
};

QueryEncoder make_query_encoder(ParamStore& store, const std::string& prefix, std::size_t d, Rng& rng);

// q [1 x d_model]; ContractError on an empty H.
Tensor compute_query(const QueryEncoder& enc, const Tensor& encoded);

struct AttentionOutcome {
  Tensor logits;  // q K, [1 x r]
  Tensor alpha;   // softmax(logits)
};

AttentionOutcome attention_scores(const Tensor& q, const Tensor& keys);

// r decoder parameter sets with one key column and one skill name each.
struct ExpertBank {
  std::vector<DecoderParams> experts;
  Tensor keys;  // [d_model x r]
  std::vector<std::string> skills;

  std::size_t size() const { return experts.size(); }
  void validate() const;
};

// Registers "expert.<skill>" flat vectors and "experts.keys" in `store`.
ExpertBank make_expert_bank(ParamStore& store, std::shared_ptr<const transformer::DecoderLayout> layout,
                            const std::vector<std::string>& skills, Rng& rng);

// theta* = sum_i alpha_i theta_i. ContractError when alpha has the wrong length.
DecoderParams mix_parameters(const ExpertBank& bank, const Tensor& alpha);

// Gold skill vector used directly as mixing weights; ContractError when no bit is set.
Tensor oracle_attention(std::span<const double> skill_vector, bool normalize = false);

// Binary weights at the named skills. LookupError for an unknown name,
// ContractError for an empty list.
Tensor manual_attention(const std::vector<std::string>& bank_skills, const std::vector<std::string>& names,
                        bool normalize = false);

// Modules shared by every transformer variant.
struct TransformerCore {
  transformer::ModelConfig cfg;
  transformer::EmbeddingTables tables;
  transformer::EncoderWeights encoder;
  transformer::OutputLayer output;
};

struct ForwardInput {
  const transformer::EncoderInput& source;
  std::span<const int> target_in;       // <SOS> y1 ... (embedding ids)
  std::span<const int> source_ext_ids;  // copy targets
  std::size_t ext_vocab;
};

struct ForwardResult {
  Tensor probs;                 // [k x ext_vocab]
  Tensor mixing;                // weights actually applied to the experts
  std::optional<AttentionOutcome> attention;  // absent when the weights were given
};

Tensor encode_source(const TransformerCore& core, const transformer::EncoderInput& source);

// Decode with one parameter set (plain Transformer, or the universal loop
// when cfg.hops > 1).
Tensor run_decoder(const TransformerCore& core, const DecoderParams& theta, const Tensor& target_embedded,
                   const Tensor& encoded, transformer::DecodeTrace* trace);

ForwardResult single_forward(const TransformerCore& core, const DecoderParams& theta, const ForwardInput& in);

// Attention over Parameters: one decoder pass with theta* = sum alpha_i theta_i.
// `alpha` replaces softmax(qK) when given.
ForwardResult aop_forward(const TransformerCore& core, const ExpertBank& bank, const QueryEncoder& enc,
                          const ForwardInput& in, const Tensor* alpha = nullptr);

// Attention over Representations: r decoder passes, outputs mixed with alpha.
ForwardResult aor_forward(const TransformerCore& core, const ExpertBank& bank, const QueryEncoder& enc,
                          const ForwardInput& in, const Tensor* alpha = nullptr);

}  // namespace aop::experts
