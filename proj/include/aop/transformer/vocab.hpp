#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace aop::transformer {

// Reserved ids shared by every word vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kSos = 1;
inline constexpr int kEos = 2;
inline constexpr int kTableMarker = 3;  // <TM>: query returned too many rows
inline constexpr int kUnk = 4;

inline const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"<PAD>", "<SOS>", "<EOS>", "<TM>", "<UNK>"};
  return specials;
}

// String <-> id table. Word vocabularies start with the special tokens; tag
// vocabularies (types and segments) start with "<pad>" only.
class Vocab {
 public:
  static Vocab words();
  static Vocab tags();

  int add(const std::string& token);
  // Id of `token`, or the fallback id (kUnk for words, 0 for tags) when absent.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocab from_tokens(const std::vector<std::string>& tokens, int fallback);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int fallback_ = kUnk;
};

// Source tokens mapped twice: `ids` index the embedding table (out-of-vocabulary
// becomes <UNK>); `ext_ids` give each distinct OOV source token its own id
// past the vocabulary so the copy path can produce it.
struct SourceIds {
  std::vector<int> ids;
  std::vector<int> ext_ids;
  std::vector<std::string> oov;  // ext id = vocab.size() + position here

  std::size_t ext_vocab_size(const Vocab& vocab) const { return vocab.size() + oov.size(); }
};

SourceIds encode_source(const Vocab& vocab, std::span<const std::string> tokens);

// Target ids in the extended space of `source`: in-vocabulary tokens keep their
// id, OOV tokens present in the source get their extended id, the rest <UNK>.
std::vector<int> encode_target(const Vocab& vocab, const SourceIds& source, std::span<const std::string> tokens);

// Inverse of encode_target for generated ids.
std::string decode_token(const Vocab& vocab, const SourceIds& source, int id);

}  // namespace aop::transformer
