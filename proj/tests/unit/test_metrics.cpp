#include <cmath>
#include <vector>

#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "aop/metrics/evaluate.hpp"
#include "aop/metrics/metrics.hpp"
#include "aop/rng.hpp"
#include "aop/training/training.hpp"
#include "doctest.h"
#include "fixtures.hpp"

namespace mt = aop::metrics;
using fixtures::split;

namespace {

std::vector<mt::Tokens> corpus(const std::vector<std::string>& lines) {
  std::vector<mt::Tokens> out;
  for (const auto& l : lines) out.push_back(split(l));
  return out;
}

aop::data::EntityLexicon lexicon() {
  aop::data::EntityLexicon lex;
  lex.add("avalon", "hotel");
  lex.add("acorn guest house", "hotel");
  lex.add("tr7553", "train");
  lex.add("cambridge", "train");
  lex.add("london", "train");
  return lex;
}

}  // namespace

TEST_CASE("BLEU") {
  const auto hyps = corpus({"the cheapest hotel in the north is the avalon and it has 1 star .",
                            "i have booked a table for 4 people at 7 pm , your reference is abc123 .",
                            "tr7553 leaves cambridge at 10:15 and arrives in london by 11:45 ."});
  const auto refs = corpus({"the avalon is the cheapest hotel in the north and it has 1 star .",
                            "i booked a table for 4 people at 7 pm . the reference number is abc123 .",
                            "tr7553 leaves cambridge at 10:15 and arrives in london at 11:45 ."});
  CHECK(std::abs(mt::bleu(hyps, refs) - 68.0116737771001) < 0.01);
  CHECK(std::abs(mt::bleu(corpus({"a b c d e f"}), corpus({"a b c d e f g h"})) - 71.65313105737896) < 0.01);
  CHECK(mt::bleu(refs, refs) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(mt::bleu(corpus({"a b c d"}), corpus({"d c b a"})) == 0.0);

  auto rh = hyps, rr = refs;
  std::swap(rh[0], rh[2]);
  std::swap(rr[0], rr[2]);
  CHECK(mt::bleu(rh, rr) == doctest::Approx(mt::bleu(hyps, refs)).epsilon(1e-12));

  CHECK(mt::bleu(corpus({"a b c d"}), corpus({"d c b a"}), true) > 0.0);
  CHECK_THROWS_AS(mt::bleu({}, {}), aop::ContractError);
  CHECK_THROWS_AS(mt::bleu(hyps, corpus({"x"})), aop::ContractError);
}

TEST_CASE("entity F1") {
  const auto lex = lexicon();
  CHECK(mt::extract_entities(split("stay at acorn guest house or avalon"), lex) ==
        mt::Tokens{"acorn guest house", "avalon"});

  const auto both = mt::entity_counts(split("avalon and tr7553 ok"), split("tr7553 then avalon"), lex);
  CHECK(both.f1() == 1.0);
  const auto none = mt::entity_counts(split("no idea"), split("tr7553 then avalon"), lex);
  CHECK(none.f1() == 0.0);
  CHECK(none.precision() == 0.0);
  const auto half = mt::entity_counts(split("avalon and london"), split("avalon and tr7553"), lex);
  CHECK(half.precision() == 0.5);
  CHECK(half.recall() == 0.5);
  CHECK(half.f1() == 0.5);

  const auto total = mt::entity_f1(corpus({"avalon and london", "tr7553"}), corpus({"avalon and tr7553", "tr7553"}), lex);
  CHECK(total.true_positive == 2);
  CHECK(total.false_positive == 1);
  CHECK(total.false_negative == 1);
  CHECK(total.precision() >= 0.0);
  CHECK(total.recall() <= 1.0);
}

TEST_CASE("exact match") {
  CHECK(mt::exact_match({"SELECT * FROM hotel"}, {"SELECT  *   FROM hotel "}) == 1.0);
  CHECK(mt::exact_match({"BOOK FROM hotel WHERE people = 2"}, {"BOOK FROM hotel WHERE people = 3"}) == 0.0);
  CHECK(mt::exact_match({"a", "b", "c", "d"}, {"a", "x", "c", "y"}) == 0.5);
  const std::string messy = "  a \t b\n c ";
  CHECK(mt::normalize_whitespace(mt::normalize_whitespace(messy)) == mt::normalize_whitespace(messy));
  CHECK(mt::exact_match({}, {}) == 0.0);
  CHECK_THROWS_AS(mt::exact_match({"a"}, {}), aop::ContractError);
}

TEST_CASE("perplexity") {
  CHECK(mt::perplexity(0.0, 5) == 1.0);
  CHECK(mt::perplexity(3 * std::log(40.0), 3) == doctest::Approx(40.0).epsilon(1e-14));
  CHECK(std::abs(mt::perplexity(std::log(2.0) + std::log(4.0), 2) - 2.82842712474619) < 1e-12);

  const auto c = aop::data::generate_synthetic_corpus(3, {8, 4, 4});
  const aop::data::SkillLayout layout(aop::data::synthetic_skill_names());
  auto model = aop::experts::DialogueModel::build(aop::experts::Variant::Aop, fixtures::tiny_config(), c.data.train,
                                                  layout, 2);
  const auto totals = aop::training::corpus_nll(model, c.data.valid);
  CHECK(std::abs(mt::perplexity(model, c.data.valid) - std::exp(totals.mean())) < 1e-9);
  CHECK(mt::perplexity(model, c.data.valid) >= 1.0);
}

TEST_CASE("consistency score") {
  mt::KeywordNli nli;
  nli.entail("dog", "have dog");
  nli.contradict("no pets", "have dog");
  nli.contradict("hate jazz", "listen jazz");
  const std::vector<std::string> profile = {"i have a dog .", "i listen to jazz .", "i live in tokyo ."};
  CHECK(mt::consistency("my dog is called rex", profile, nli) == 1);
  CHECK(mt::consistency("i have no pets and hate jazz", profile, nli) == -2);
  CHECK(mt::consistency("anything", {}, nli) == 0);

  // additivity over profile concatenation
  aop::Rng rng(17);
  const std::vector<std::string> pool = {"i have a dog .", "i listen to jazz .", "i live in tokyo .", "i am tall ."};
  const std::vector<std::string> utterances = {"my dog", "no pets here", "i hate jazz", "hello", "dog and jazz"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> p1, p2;
    for (auto n = rng.below(4); n > 0; --n) p1.push_back(rng.pick(pool));
    for (auto n = rng.below(4); n > 0; --n) p2.push_back(rng.pick(pool));
    auto both = p1;
    both.insert(both.end(), p2.begin(), p2.end());
    const auto& u = rng.pick(utterances);
    REQUIRE(mt::consistency(u, both, nli) == mt::consistency(u, p1, nli) + mt::consistency(u, p2, nli));
  }

  const auto bad = [](const std::string&, const std::string&) { return 3; };
  CHECK_THROWS_AS(mt::consistency("x", {"y"}, bad), aop::ContractError);
}

TEST_CASE("NLI over a subprocess") {
  mt::SubprocessNli nli("while IFS= read -r line; do case \"$line\" in *dog*) echo +1;; *cat*) echo -1;; *) echo 0;; esac; done");
  CHECK(nli("i love my dog", "x") == 1);
  CHECK(nli("cats", "x") == -1);
  CHECK(nli("nothing", "x") == 0);
  CHECK_THROWS_AS(nli("tab\there", "x"), aop::ContractError);

  mt::SubprocessNli broken("while read -r line; do echo maybe; done");
  CHECK_THROWS_AS(broken("a", "b"), aop::ParseError);
}

TEST_CASE("per-domain rows") {
  const auto c = aop::data::generate_synthetic_corpus(4, {8, 8, 40});
  const auto& test = c.data.test;
  std::vector<mt::Tokens> gold_as_pred;
  for (const auto& e : test) gold_as_pred.push_back(e.target);
  const auto rows = mt::per_domain_f1(gold_as_pred, test, c.lexicon);
  CHECK(rows.count("hotel") == 1);
  CHECK(rows.count("train") == 1);
  CHECK(rows.count("persona") == 1);
  CHECK(!rows.at("persona").f1_defined());
  for (const auto& [d, r] : rows) {
    if (r.f1_defined()) CHECK(r.entities.f1() == 1.0);
    CHECK(r.sql_correct == r.sql_total);
    CHECK(r.book_correct == r.book_total);
  }

  // each row equals the global score over that domain's subset
  std::vector<mt::Tokens> preds;
  for (const auto& e : test) preds.push_back({e.target.begin(), e.target.begin() + e.target.size() / 2});
  const auto partial = mt::per_domain_f1(preds, test, c.lexicon);
  for (const auto& domain : {std::string("hotel"), std::string("train")}) {
    std::vector<mt::Tokens> h, g;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (mt::example_domain_label(test[i]) != domain) continue;
      if (mt::target_type(test[i].target) != mt::TargetType::Response) continue;
      h.push_back(preds[i]);
      g.push_back(test[i].target);
    }
    const auto global = mt::entity_f1(h, g, c.lexicon);
    CHECK(partial.at(domain).entities.true_positive == global.true_positive);
    CHECK(partial.at(domain).entities.false_positive == global.false_positive);
    CHECK(partial.at(domain).entities.false_negative == global.false_negative);
  }

  std::vector<aop::data::DialogueExample> one_domain;
  std::vector<mt::Tokens> one_pred;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (mt::example_domain_label(test[i]) == "hotel") {
      one_domain.push_back(test[i]);
      one_pred.push_back(preds[i]);
    }
  }
  const auto single = mt::per_domain_f1(one_pred, one_domain, c.lexicon);
  CHECK(single.size() == 1);
  const auto report = mt::score(one_pred, one_domain, c.lexicon);
  CHECK(single.at("hotel").entities.f1() == doctest::Approx(report.f1).epsilon(1e-15));
}

TEST_CASE("evaluation report") {
  const auto c = aop::data::generate_synthetic_corpus(4, {8, 8, 16});
  std::vector<mt::Tokens> preds;
  for (const auto& e : c.data.test) preds.push_back(e.target);
  mt::KeywordNli nli;
  nli.entail("i", "i");
  const mt::NliOracle oracle = nli;
  auto report = mt::score(preds, c.data.test, c.lexicon, &oracle);
  CHECK(report.sql_acc == 1.0);
  CHECK(report.book_acc == 1.0);
  CHECK(report.f1 == 1.0);
  CHECK(report.bleu == doctest::Approx(100.0));
  REQUIRE(report.consistency.has_value());
  CHECK(*report.consistency > 0.0);
  CHECK(report.to_json().find("\"SQL_Acc\"") != std::string::npos);
  CHECK(report.to_text().find("BOOK_Acc") != std::string::npos);
  CHECK(mt::target_type(split("SELECT * FROM hotel")) == mt::TargetType::Sql);
  CHECK(mt::target_type(split("BOOK FROM train")) == mt::TargetType::Book);
  CHECK(mt::target_type(split("hello")) == mt::TargetType::Response);
}
