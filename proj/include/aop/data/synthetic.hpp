#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aop/data/corpus.hpp"

namespace aop::data {

// Desk-scale multi-skill corpus over two domains (hotel, train). Four target
// kinds, balanced round-robin inside each split:
//   sql     SELECT query over slots mentioned by the user      {SQL, domain}
//   book    BOOK query, train ids copied from memory           {BOOK, domain}
//   lookup  answer read from the memory records                {domain}
//   persona persona sentence answering a chit-chat question    {Persona}
struct SyntheticSizes {
  std::size_t train = 2000;
  std::size_t valid = 200;
  std::size_t test = 200;
};

struct SyntheticCorpus {
  Dataset data;
  EntityLexicon lexicon;
};

const std::vector<std::string>& synthetic_skill_names();
const std::vector<std::string>& synthetic_domains();

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, const SyntheticSizes& sizes = {});

// Kind and domain are encoded in the example id ("<split>-<n>-<kind>-<domain>").
std::string example_kind(const DialogueExample& example);
std::string example_domain(const DialogueExample& example);

}  // namespace aop::data
