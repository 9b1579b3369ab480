#pragma once

#include <vector>

#include "aop/experts/model.hpp"
#include "aop/metrics/metrics.hpp"

namespace aop::metrics {

// exp(mean target NLL) of the model over `examples`.
double perplexity(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples);

struct Evaluation {
  EvalReport report;
  std::vector<Tokens> predictions;
};

// Greedy decoding of every example followed by score() and perplexity.
Evaluation evaluate(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples,
                    const data::EntityLexicon& lexicon, const NliOracle* oracle = nullptr, std::size_t max_len = 60);

}  // namespace aop::metrics
