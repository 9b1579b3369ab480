#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aop/autodiff/gradcheck.hpp"
#include "aop/autodiff/optimizer.hpp"
#include "aop/data/corpus.hpp"
#include "aop/experts/model.hpp"

namespace aop::training {

using autodiff::Tensor;

struct TrainConfig {
  std::size_t batch_size = 16;
  std::string schedule = "constant";
  double learning_rate = 1e-3;
  std::size_t warmup = 400;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t max_steps = 0;  // 0: no limit
  double token_weight = 1.0;
  double skill_weight = 1.0;
  bool disable_skill_loss = false;
  double max_grad_norm = 0.0;
  std::uint64_t seed = 1;
  std::filesystem::path log_path;         // per-epoch CSV, skipped when empty
  std::filesystem::path checkpoint_path;  // best model, skipped when empty

  void validate() const;
};

// -sum_t log P_t(y_t) over positions whose target is not <PAD>.
// VocabularyError for a target outside the distribution's columns.
Tensor token_loss(const Tensor& probs, std::span<const int> targets);

// Binary cross-entropy of sigmoid(logits) against the skill vector, summed over skills.
Tensor skill_loss(const Tensor& logits, std::span<const double> skills);

struct LossTerms {
  Tensor total;
  Tensor token;
  Tensor skill;  // undefined when the skill term is off
};

LossTerms example_loss(const experts::DialogueModel& model, const experts::EncodedExample& ex,
                       const TrainConfig& cfg);

bool uses_skill_loss(const experts::DialogueModel& model, const TrainConfig& cfg);

// Total target NLL and unmasked target count over `examples`.
struct NllTotals {
  double nll = 0.0;
  std::size_t tokens = 0;
  double mean() const;
};

NllTotals corpus_nll(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples);

// Fraction of examples whose thresholded sigmoid(qK) differs from the gold skill
// set. Zero for the oracle variant; ContractError for variants without skill attention.
double attention_error_rate(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_token_loss = 0.0;
  double train_skill_loss = 0.0;
  double valid_token_loss = 0.0;
  double attention_error_rate = 0.0;  // NaN when the variant has no skill attention
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  std::size_t steps = 0;
};

// Minibatch Adam with teacher forcing. Early-stops on validation token loss and
// leaves the model at its best epoch. NumericError on a non-finite loss.
TrainResult train(experts::DialogueModel& model, const data::Dataset& data, const TrainConfig& cfg,
                  std::ostream* progress = nullptr);

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

// Central differences against backprop over every parameter of a freshly
// built model (d = d_model = dims, 2 heads) on one synthetic example whose
// skills fit the first `experts` synthetic skills.
struct ModelGradCheck {
  autodiff::GradCheckResult result;
  std::size_t parameters = 0;        // scalar parameters in the model
  std::vector<std::string> tensors;  // every named tensor that was perturbed
};

ModelGradCheck model_gradcheck(experts::Variant variant, std::size_t dims, std::size_t experts, std::uint64_t seed);

}  // namespace aop::training
