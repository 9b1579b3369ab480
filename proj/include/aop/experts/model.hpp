#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aop/data/corpus.hpp"
#include "aop/data/skills.hpp"
#include "aop/experts/experts.hpp"
#include "aop/experts/moe.hpp"
#include "aop/transformer/vocab.hpp"

namespace aop::experts {

enum class Variant { Trs, TrsU, Moe, Aor, Aop, AopU, AopNoLv, AopOracle };

// Accepts the names printed by variant_name, case-insensitively.
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
const std::vector<Variant>& all_variants();

bool has_expert_bank(Variant v);  // AoR and every AoP flavour
bool has_skill_loss(Variant v);   // learned attention supervised by the skill vector
bool is_universal(Variant v);

struct EncodedExample {
  std::string id;
  transformer::EncoderInput source;
  transformer::SourceIds source_ids;
  std::vector<int> target_in;   // <SOS> y1 .. yk, extended ids replaced by <UNK>
  std::vector<int> target_out;  // y1 .. yk <EOS> in the extended space
  std::vector<double> skills;
  std::size_t ext_vocab = 0;
};

struct ModelOutput {
  Tensor probs;   // [k+1 x ext_vocab]
  Tensor logits;  // q K [1 x r]; undefined without learned attention
  Tensor mixing;  // weights applied to the experts or MoE gate
};

struct ModelOptions {
  std::size_t min_count = 1;      // training-split frequency needed to enter the vocabulary
  bool normalize_oracle = false;  // divide gold skill weights by their count
};

class DialogueModel {
 public:
  DialogueModel(Variant variant, transformer::ModelConfig cfg, transformer::Vocab words, transformer::Vocab tags,
                data::SkillLayout skills, std::uint64_t seed, ModelOptions options = {});

  // Vocabularies come from `train`; the universal variants default to 6 hops.
  static DialogueModel build(Variant variant, transformer::ModelConfig cfg,
                             const std::vector<data::DialogueExample>& train, const data::SkillLayout& skills,
                             std::uint64_t seed, ModelOptions options = {});

  DialogueModel(const DialogueModel&) = delete;
  DialogueModel& operator=(const DialogueModel&) = delete;
  DialogueModel(DialogueModel&&) = default;
  DialogueModel& operator=(DialogueModel&&) = default;

  EncodedExample encode(const data::DialogueExample& example) const;

  // Teacher-forced forward. `alpha` overrides the expert weights (or the MoE gate).
  ModelOutput forward(const EncodedExample& ex, const Tensor* alpha = nullptr) const;

  // softmax(qK) and its logits. ContractError for variants without learned attention.
  AttentionOutcome attention(const EncodedExample& ex) const;

  // Greedy decoding with the mixed decoder computed once per example.
  std::vector<std::string> generate(const data::DialogueExample& example, std::size_t max_len = 40,
                                    const Tensor* alpha = nullptr) const;

  Variant variant() const { return variant_; }
  const transformer::ModelConfig& config() const { return core_.cfg; }
  const transformer::Vocab& words() const { return words_; }
  const transformer::Vocab& tags() const { return tags_; }
  const data::SkillLayout& skills() const { return skills_; }
  const ModelOptions& options() const { return options_; }
  ParamStore& params() { return *store_; }
  const ParamStore& params() const { return *store_; }
  const TransformerCore& core() const { return core_; }
  const ExpertBank& bank() const;
  const QueryEncoder& query_encoder() const;
  const MoeWeights& moe() const;
  const DecoderParams& decoder() const;

  void save(const std::filesystem::path& path) const;
  static DialogueModel load(const std::filesystem::path& path);

  // One "id,w1,...,wr" line per example with the weights the model applies.
  void write_attention(std::ostream& out, const std::vector<data::DialogueExample>& examples) const;

 private:
  Tensor expert_weights(const EncodedExample& ex, const Tensor& encoded, const Tensor* alpha,
                        Tensor* logits) const;

  Variant variant_;
  transformer::Vocab words_, tags_;
  data::SkillLayout skills_;
  ModelOptions options_;
  std::unique_ptr<ParamStore> store_;
  TransformerCore core_;
  std::optional<DecoderParams> decoder_;
  std::optional<ExpertBank> bank_;
  std::optional<QueryEncoder> query_;
  std::optional<MoeWeights> moe_;
};

}  // namespace aop::experts
