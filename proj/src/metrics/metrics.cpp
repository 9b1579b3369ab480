#include "aop/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "aop/data/skills.hpp"
#include "aop/errors.hpp"
#include "json.hpp"

namespace aop::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

Tokens words(const std::string& text) {
  std::istringstream in(text);
  Tokens out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool contains_all(const Tokens& haystack, const Tokens& needles) {
  return std::all_of(needles.begin(), needles.end(), [&](const std::string& w) {
    return std::find(haystack.begin(), haystack.end(), w) != haystack.end();
  });
}

double ratio(std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }

std::string joined(const Tokens& t) {
  std::string out;
  for (const auto& w : t) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, bool smooth) {
  if (hypotheses.empty()) throw ContractError("BLEU over an empty corpus");
  if (hypotheses.size() != references.size()) throw ContractError("BLEU needs one reference per hypothesis");
  std::size_t hyp_len = 0, ref_len = 0;
  std::size_t matched[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    hyp_len += hypotheses[s].size();
    ref_len += references[s].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hypotheses[s], n);
      const auto r = ngrams(references[s], n);
      for (const auto& [gram, count] : h) {
        total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    double m = static_cast<double>(matched[n]), t = static_cast<double>(total[n]);
    if (smooth && n > 0) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)) : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

double EntityCounts::precision() const { return ratio(true_positive, true_positive + false_positive); }
double EntityCounts::recall() const { return ratio(true_positive, true_positive + false_negative); }
double EntityCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

EntityCounts& EntityCounts::operator+=(const EntityCounts& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  return *this;
}

Tokens extract_entities(const Tokens& tokens, const data::EntityLexicon& lexicon) {
  Tokens found;
  const auto& entries = lexicon.entries();
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(lexicon.longest(), tokens.size() - i); len >= 1; --len) {
      const std::string candidate = joined(Tokens(tokens.begin() + i, tokens.begin() + i + len));
      if (entries.count(candidate)) {
        found.push_back(candidate);
        matched = len;
        break;
      }
    }
    i += matched ? matched : 1;
  }
  return found;
}

EntityCounts entity_counts(const Tokens& hypothesis, const Tokens& gold, const data::EntityLexicon& lexicon) {
  std::map<std::string, std::size_t> predicted, expected;
  for (const auto& e : extract_entities(hypothesis, lexicon)) ++predicted[e];
  for (const auto& e : extract_entities(gold, lexicon)) ++expected[e];
  EntityCounts c;
  for (const auto& [e, n] : expected) {
    auto it = predicted.find(e);
    const std::size_t hit = it == predicted.end() ? 0 : std::min(n, it->second);
    c.true_positive += hit;
    c.false_negative += n - hit;
  }
  std::size_t predicted_total = 0;
  for (const auto& [e, n] : predicted) predicted_total += n;
  c.false_positive = predicted_total - c.true_positive;
  return c;
}

EntityCounts entity_f1(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& golds,
                       const data::EntityLexicon& lexicon) {
  if (hypotheses.size() != golds.size()) throw ContractError("entity F1 needs one gold response per hypothesis");
  EntityCounts total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += entity_counts(hypotheses[i], golds[i], lexicon);
  return total;
}

std::string normalize_whitespace(const std::string& text) { return joined(words(text)); }

double exact_match(const std::vector<std::string>& hypotheses, const std::vector<std::string>& golds) {
  if (hypotheses.size() != golds.size()) throw ContractError("exact match needs one gold string per hypothesis");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (normalize_whitespace(hypotheses[i]) == normalize_whitespace(golds[i])) ++hits;
  }
  return ratio(hits, hypotheses.size());
}

double perplexity(double total_nll, std::size_t tokens) {
  if (tokens == 0) return 1.0;
  return std::exp(total_nll / static_cast<double>(tokens));
}

void KeywordNli::entail(const std::string& utterance_cue, const std::string& persona_cue) {
  entail_.push_back({words(lower(utterance_cue)), words(lower(persona_cue))});
}

void KeywordNli::contradict(const std::string& utterance_cue, const std::string& persona_cue) {
  contradict_.push_back({words(lower(utterance_cue)), words(lower(persona_cue))});
}

int KeywordNli::operator()(const std::string& utterance, const std::string& persona) const {
  const Tokens u = words(lower(utterance)), p = words(lower(persona));
  auto fires = [&](const Rule& r) { return contains_all(u, r.utterance) && contains_all(p, r.persona); };
  if (std::any_of(contradict_.begin(), contradict_.end(), fires)) return -1;
  if (std::any_of(entail_.begin(), entail_.end(), fires)) return 1;
  return 0;
}

SubprocessNli::SubprocessNli(const std::string& command) {
  int down[2], up[2];
  if (pipe(down) != 0 || pipe(up) != 0) throw Error("cannot create pipes for the NLI process");
  pid_ = fork();
  if (pid_ < 0) throw Error("cannot start the NLI process");
  if (pid_ == 0) {
    dup2(down[0], STDIN_FILENO);
    dup2(up[1], STDOUT_FILENO);
    close(down[0]);
    close(down[1]);
    close(up[0]);
    close(up[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(down[0]);
  close(up[1]);
  to_child_ = down[1];
  from_child_ = up[0];
}

SubprocessNli::~SubprocessNli() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) waitpid(pid_, nullptr, 0);
}

int SubprocessNli::operator()(const std::string& utterance, const std::string& persona) {
  if (utterance.find_first_of("\t\n") != std::string::npos || persona.find_first_of("\t\n") != std::string::npos) {
    throw ContractError("NLI requests cannot contain tabs or newlines");
  }
  const std::string request = utterance + "\t" + persona + "\n";
  for (std::size_t sent = 0; sent < request.size();) {
    const auto n = write(to_child_, request.data() + sent, request.size() - sent);
    if (n <= 0) throw Error("NLI process closed its input");
    sent += static_cast<std::size_t>(n);
  }
  std::size_t eol;
  while ((eol = buffer_.find('\n')) == std::string::npos) {
    char chunk[256];
    const auto n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) throw Error("NLI process ended without a reply");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string reply = normalize_whitespace(buffer_.substr(0, eol));
  buffer_.erase(0, eol + 1);
  if (reply == "+1" || reply == "1") return 1;
  if (reply == "0") return 0;
  if (reply == "-1") return -1;
  throw ParseError("NLI reply must be +1, 0 or -1, got '" + reply + "'");
}

int consistency(const std::string& utterance, const std::vector<std::string>& profile, const NliOracle& oracle) {
  int c = 0;
  for (const auto& p : profile) {
    const int j = oracle(utterance, p);
    if (j < -1 || j > 1) throw ContractError("NLI judgments are -1, 0 or +1");
    c += j;
  }
  return c;
}

std::vector<std::string> persona_sentences(const Tokens& memory) {
  std::vector<std::string> out;
  Tokens current;
  for (const auto& t : memory) {
    current.push_back(t);
    if (t == ".") {
      out.push_back(joined(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(joined(current));
  return out;
}

std::string example_domain_label(const data::DialogueExample& example) {
  const auto& domains = data::known_domains();
  for (const auto& s : example.skills) {
    const std::string d = lower(s);
    if (std::find(domains.begin(), domains.end(), d) != domains.end()) return d;
  }
  if (std::find(example.skills.begin(), example.skills.end(), "Persona") != example.skills.end()) return "persona";
  return "none";
}

TargetType target_type(const Tokens& target) {
  if (target.size() >= 3 && target[0] == "SELECT" && target[1] == "*" && target[2] == "FROM") return TargetType::Sql;
  if (target.size() >= 2 && target[0] == "BOOK" && target[1] == "FROM") return TargetType::Book;
  return TargetType::Response;
}

std::map<std::string, DomainRow> per_domain_f1(const std::vector<Tokens>& predictions,
                                               const std::vector<data::DialogueExample>& examples,
                                               const data::EntityLexicon& lexicon) {
  if (predictions.size() != examples.size()) throw ContractError("one prediction per example");
  std::map<std::string, DomainRow> rows;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& row = rows[example_domain_label(examples[i])];
    const auto& gold = examples[i].target;
    switch (target_type(gold)) {
      case TargetType::Sql:
        ++row.sql_total;
        row.sql_correct += predictions[i] == gold;
        break;
      case TargetType::Book:
        ++row.book_total;
        row.book_correct += predictions[i] == gold;
        break;
      case TargetType::Response:
        row.entities += entity_counts(predictions[i], gold, lexicon);
        break;
    }
  }
  return rows;
}

EvalReport score(const std::vector<Tokens>& predictions, const std::vector<data::DialogueExample>& examples,
                 const data::EntityLexicon& lexicon, const NliOracle* oracle) {
  if (predictions.size() != examples.size()) throw ContractError("one prediction per example");
  if (examples.empty()) throw ContractError("nothing to evaluate");
  EvalReport report;
  report.examples = examples.size();
  std::vector<Tokens> golds, responses, response_golds, sql_h, sql_g, book_h, book_g;
  std::vector<std::string> sql_hs, sql_gs, book_hs, book_gs;
  double c_total = 0;
  std::size_t c_count = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& gold = examples[i].target;
    golds.push_back(gold);
    switch (target_type(gold)) {
      case TargetType::Sql:
        sql_h.push_back(predictions[i]);
        sql_g.push_back(gold);
        sql_hs.push_back(joined(predictions[i]));
        sql_gs.push_back(joined(gold));
        break;
      case TargetType::Book:
        book_h.push_back(predictions[i]);
        book_g.push_back(gold);
        book_hs.push_back(joined(predictions[i]));
        book_gs.push_back(joined(gold));
        break;
      case TargetType::Response:
        responses.push_back(predictions[i]);
        response_golds.push_back(gold);
        if (oracle && example_domain_label(examples[i]) == "persona") {
          c_total += consistency(joined(predictions[i]), persona_sentences(examples[i].memory), *oracle);
          ++c_count;
        }
        break;
    }
  }
  report.bleu = responses.empty() ? 0.0 : bleu(responses, response_golds);
  report.f1 = entity_f1(responses, response_golds, lexicon).f1();
  report.sql_examples = sql_h.size();
  report.book_examples = book_h.size();
  if (!sql_h.empty()) {
    report.sql_acc = exact_match(sql_hs, sql_gs);
    report.sql_bleu = bleu(sql_h, sql_g);
  }
  if (!book_h.empty()) {
    report.book_acc = exact_match(book_hs, book_gs);
    report.book_bleu = bleu(book_h, book_g);
  }
  if (c_count) report.consistency = c_total / static_cast<double>(c_count);
  report.per_domain = per_domain_f1(predictions, examples, lexicon);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j = {{"F1", f1},           {"BLEU", bleu},         {"SQL_Acc", sql_acc}, {"SQL_BLEU", sql_bleu},
                      {"BOOK_Acc", book_acc}, {"BOOK_BLEU", book_bleu}, {"Ppl", ppl},       {"examples", examples},
                      {"sql_examples", sql_examples}, {"book_examples", book_examples}};
  j["C"] = consistency ? nlohmann::json(*consistency) : nlohmann::json(nullptr);
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [domain, r] : per_domain) {
    rows[domain] = {{"F1", r.f1_defined() ? nlohmann::json(r.entities.f1()) : nlohmann::json(nullptr)},
                    {"gold_entities", r.entities.gold()},
                    {"SQL_Acc", r.sql_total ? nlohmann::json(ratio(r.sql_correct, r.sql_total)) : nlohmann::json(nullptr)},
                    {"BOOK_Acc", r.book_total ? nlohmann::json(ratio(r.book_correct, r.book_total)) : nlohmann::json(nullptr)}};
  }
  j["per_domain"] = rows;
  return j.dump(2);
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(12) << "F1" << f1 << '\n'
      << std::setw(12) << "BLEU" << bleu << '\n'
      << std::setw(12) << "SQL_Acc" << sql_acc << "  (" << sql_examples << ")\n"
      << std::setw(12) << "SQL_BLEU" << sql_bleu << '\n'
      << std::setw(12) << "BOOK_Acc" << book_acc << "  (" << book_examples << ")\n"
      << std::setw(12) << "BOOK_BLEU" << book_bleu << '\n'
      << std::setw(12) << "Ppl" << ppl << '\n'
      << std::setw(12) << "C";
  if (consistency) {
    out << *consistency << '\n';
  } else {
    out << "-\n";
  }
  out << "\n" << std::setw(12) << "domain" << std::setw(10) << "F1" << std::setw(10) << "SQL_Acc" << "BOOK_Acc\n";
  for (const auto& [domain, r] : per_domain) {
    auto cell = [&](bool defined, double v) {
      std::ostringstream c;
      c << std::fixed << std::setprecision(4);
      if (defined) {
        c << v;
      } else {
        c << "-";
      }
      return c.str();
    };
    out << std::setw(12) << domain << std::setw(10) << cell(r.f1_defined(), r.entities.f1()) << std::setw(10)
        << cell(r.sql_total > 0, ratio(r.sql_correct, r.sql_total))
        << cell(r.book_total > 0, ratio(r.book_correct, r.book_total)) << '\n';
  }
  return out.str();
}

}  // namespace aop::metrics
