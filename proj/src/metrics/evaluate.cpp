#include "aop/metrics/evaluate.hpp"

#include "aop/training/training.hpp"

namespace aop::metrics {

double perplexity(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples) {
  const auto totals = training::corpus_nll(model, examples);
  return perplexity(totals.nll, totals.tokens);
}

Evaluation evaluate(const experts::DialogueModel& model, const std::vector<data::DialogueExample>& examples,
                    const data::EntityLexicon& lexicon, const NliOracle* oracle, std::size_t max_len) {
  Evaluation out;
  out.predictions.reserve(examples.size());
  for (const auto& e : examples) out.predictions.push_back(model.generate(e, max_len));
  out.report = score(out.predictions, examples, lexicon, oracle);
  out.report.ppl = perplexity(model, examples);
  return out;
}

}  // namespace aop::metrics
