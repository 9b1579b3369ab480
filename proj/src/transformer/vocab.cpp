#include "aop/transformer/vocab.hpp"

#include <algorithm>

#include "aop/errors.hpp"

namespace aop::transformer {

Vocab Vocab::words() {
  Vocab v;
  v.fallback_ = kUnk;
  for (const auto& s : special_tokens()) v.add(s);
  return v;
}

Vocab Vocab::tags() {
  Vocab v;
  v.fallback_ = 0;
  v.add("<pad>");
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens, int fallback) {
  Vocab v;
  v.fallback_ = fallback;
  for (const auto& t : tokens) {
    if (v.contains(t)) throw ParseError("duplicate vocabulary entry: " + t);
    v.add(t);
  }
  return v;
}

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? fallback_ : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

SourceIds encode_source(const Vocab& vocab, std::span<const std::string> tokens) {
  SourceIds out;
  for (const auto& t : tokens) {
    if (vocab.contains(t)) {
      const int id = vocab.id(t);
      out.ids.push_back(id);
      out.ext_ids.push_back(id);
      continue;
    }
    out.ids.push_back(kUnk);
    auto it = std::find(out.oov.begin(), out.oov.end(), t);
    std::size_t pos = static_cast<std::size_t>(it - out.oov.begin());
    if (it == out.oov.end()) out.oov.push_back(t);
    out.ext_ids.push_back(static_cast<int>(vocab.size() + pos));
  }
  return out;
}

std::vector<int> encode_target(const Vocab& vocab, const SourceIds& source, std::span<const std::string> tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (vocab.contains(t)) {
      out.push_back(vocab.id(t));
      continue;
    }
    auto it = std::find(source.oov.begin(), source.oov.end(), t);
    out.push_back(it == source.oov.end() ? kUnk
                                         : static_cast<int>(vocab.size() + static_cast<std::size_t>(it - source.oov.begin())));
  }
  return out;
}

std::string decode_token(const Vocab& vocab, const SourceIds& source, int id) {
  if (id >= 0 && static_cast<std::size_t>(id) < vocab.size()) return vocab.token(id);
  const std::size_t pos = static_cast<std::size_t>(id) - vocab.size();
  if (id < 0 || pos >= source.oov.size()) throw VocabularyError("extended id " + std::to_string(id) + " out of range");
  return source.oov[pos];
}

}  // namespace aop::transformer
