#pragma once

#include <string>
#include <vector>

#include "aop/data/corpus.hpp"
#include "aop/transformer/config.hpp"

namespace fixtures {

inline aop::transformer::ModelConfig tiny_config() {
  aop::transformer::ModelConfig c;
  c.embedding_dim = c.model_dim = 8;
  c.heads = 2;
  c.head_depth = 4;
  c.filter = 12;
  return c;
}

inline std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline aop::data::DialogueExample example(const std::string& id, const std::string& history,
                                          const std::string& memory, const std::string& target,
                                          std::vector<std::string> skills) {
  aop::data::DialogueExample e;
  e.id = id;
  e.history = split(history);
  e.memory = split(memory);
  e.target = split(target);
  e.skills = std::move(skills);
  for (std::size_t i = 0; i < e.history.size(); ++i) {
    e.types.push_back("Usr");
    e.segments.push_back("turn0");
  }
  for (std::size_t i = 0; i < e.memory.size(); ++i) {
    e.types.push_back("name");
    e.segments.push_back("rec0");
  }
  return e;
}

// Three skills: SQL, Hotel, Train.
inline std::vector<aop::data::DialogueExample> tiny_examples() {
  return {
      example("a", "i want a cheap hotel", "", "SELECT * FROM hotel WHERE pricerange=\"cheap\"", {"SQL", "Hotel"}),
      example("b", "a train to ely please", "", "SELECT * FROM train WHERE destination=\"ely\"", {"SQL", "Train"}),
      example("c", "what is the phone", "acorn 01223", "the phone is 01223", {"Hotel"}),
      example("d", "when does it leave", "tr1234 10:15", "it leaves at 10:15", {"Train"}),
  };
}

}  // namespace fixtures
