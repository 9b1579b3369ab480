#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aop/data/corpus.hpp"

namespace aop::metrics {

using Tokens = std::vector<std::string>;

// Corpus BLEU-4 in [0, 100]: clipped n-gram precisions, geometric mean and
// brevity penalty. Unsmoothed unless `smooth` (add-one on n > 1).
double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, bool smooth = false);

struct EntityCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;

  double precision() const;
  double recall() const;
  double f1() const;  // 0 when precision and recall are both 0
  std::size_t gold() const { return true_positive + false_negative; }
  EntityCounts& operator+=(const EntityCounts& other);
};

// Lexicon entities in `tokens`, longest match first, left to right.
Tokens extract_entities(const Tokens& tokens, const data::EntityLexicon& lexicon);

EntityCounts entity_counts(const Tokens& hypothesis, const Tokens& gold, const data::EntityLexicon& lexicon);

// Micro-averaged over the corpus.
EntityCounts entity_f1(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& golds,
                       const data::EntityLexicon& lexicon);

// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(const std::string& text);

// Fraction of pairs equal after whitespace normalisation; 0 for an empty list.
double exact_match(const std::vector<std::string>& hypotheses, const std::vector<std::string>& golds);

// exp(total NLL / token count); 1 when there are no tokens.
double perplexity(double total_nll, std::size_t tokens);

// +1 entail, 0 independent, -1 contradict.
using NliOracle = std::function<int(const std::string& utterance, const std::string& persona)>;

// Rule oracle: a rule fires when the utterance contains every word of `utterance_cue`
// and the persona sentence contains every word of `persona_cue`. Contradiction
// rules win over entailment rules.
class KeywordNli {
 public:
  void entail(const std::string& utterance_cue, const std::string& persona_cue);
  void contradict(const std::string& utterance_cue, const std::string& persona_cue);
  int operator()(const std::string& utterance, const std::string& persona) const;

 private:
  struct Rule {
    Tokens utterance, persona;
  };
  std::vector<Rule> entail_, contradict_;
};

// External classifier over a pipe: one "utterance\tpersona" line per request,
// one of +1|0|-1 per reply.
class SubprocessNli {
 public:
  explicit SubprocessNli(const std::string& command);
  ~SubprocessNli();
  SubprocessNli(const SubprocessNli&) = delete;
  SubprocessNli& operator=(const SubprocessNli&) = delete;

  int operator()(const std::string& utterance, const std::string& persona);

 private:
  int to_child_ = -1;
  int from_child_ = -1;
  int pid_ = -1;
  std::string buffer_;
};

int consistency(const std::string& utterance, const std::vector<std::string>& profile, const NliOracle& oracle);

// Persona sentences stored in a memory token sequence ('.'-terminated).
std::vector<std::string> persona_sentences(const Tokens& memory);

// Domain label of an example: its domain skill in lower case, "persona" for
// chit-chat, "none" otherwise.
std::string example_domain_label(const data::DialogueExample& example);

enum class TargetType { Sql, Book, Response };
TargetType target_type(const Tokens& target);

struct DomainRow {
  EntityCounts entities;
  std::size_t sql_total = 0, sql_correct = 0;
  std::size_t book_total = 0, book_correct = 0;
  bool f1_defined() const { return entities.gold() > 0; }
};

// Rows keyed by domain label; domains without gold entities have f1_defined() false.
std::map<std::string, DomainRow> per_domain_f1(const std::vector<Tokens>& predictions,
                                               const std::vector<data::DialogueExample>& examples,
                                               const data::EntityLexicon& lexicon);

struct EvalReport {
  double f1 = 0, bleu = 0;
  double sql_acc = 0, sql_bleu = 0;
  double book_acc = 0, book_bleu = 0;
  double ppl = 1;
  std::optional<double> consistency;  // mean C over chit-chat turns
  std::size_t examples = 0, sql_examples = 0, book_examples = 0;
  std::map<std::string, DomainRow> per_domain;

  std::string to_json() const;
  std::string to_text() const;
};

// Scores generated responses against the examples' targets. `ppl` is left for
// the caller, which owns the model.
EvalReport score(const std::vector<Tokens>& predictions, const std::vector<data::DialogueExample>& examples,
                 const data::EntityLexicon& lexicon, const NliOracle* oracle = nullptr);

}  // namespace aop::metrics
