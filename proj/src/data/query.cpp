#include "aop/data/query.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "aop/errors.hpp"

namespace aop::data {

namespace {

const std::map<std::string, std::vector<std::string>>& slot_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"hotel", {"pricerange", "stars", "type", "area", "parking", "internet", "name", "people", "day", "stay"}},
      {"train", {"destination", "day", "arriveBy", "departure", "leaveAt", "people", "id_booking"}},
      {"restaurant", {"food", "pricerange", "area", "name", "time", "day", "people"}},
      {"taxi", {"leaveAt", "destination", "departure", "arriveBy"}},
      {"attraction", {"name", "type", "area"}},
      {"hospital", {"department"}},
      {"police", {"name"}},
      {"weather", {"location", "date", "weather_attribute"}},
      {"schedule", {"event", "date", "time", "party", "room", "agenda"}},
      {"navigate", {"poi", "poi_type", "distance", "traffic_info"}},
  };
  return table;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_operator(const std::string& t) { return t == "=" || t == "<" || t == ">"; }

void split_words(const std::string& value, std::vector<std::string>& out) {
  std::istringstream in(value);
  std::string w;
  while (in >> w) out.push_back(w);
}

}  // namespace

const std::vector<std::string>& domain_slots(const std::string& domain) {
  auto it = slot_table().find(domain);
  if (it == slot_table().end()) throw LookupError("unknown domain: " + domain);
  return it->second;
}

std::string slot_operator(const std::string& slot) {
  if (slot == "arriveBy") return "<";
  if (slot == "leaveAt") return ">";
  return "=";
}

Query make_query(QueryKind kind, const std::string& domain, const std::map<std::string, std::string>& slots) {
  if (slots.empty()) throw ContractError("a query needs at least one slot");
  const auto& order = domain_slots(domain);
  auto rank = [&](const std::string& slot) {
    auto it = std::find(order.begin(), order.end(), slot);
    return static_cast<std::size_t>(it - order.begin());
  };
  std::vector<std::string> names;
  for (const auto& [slot, value] : slots) {
    if (slot.empty()) throw ContractError("empty slot name");
    if (value.empty()) throw ContractError("empty value for slot " + slot);
    names.push_back(slot);
  }
  // std::map keys are already sorted, so a stable sort keeps undeclared slots by name
  std::stable_sort(names.begin(), names.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  Query q{kind, domain, {}};
  for (const auto& slot : names) q.constraints.push_back({slot, slot_operator(slot), slots.at(slot)});
  return q;
}

std::vector<std::string> query_tokens(const Query& query) {
  std::vector<std::string> out;
  if (query.kind == QueryKind::Select) {
    out = {"SELECT", "*", "FROM"};
  } else {
    out = {"BOOK", "FROM"};
  }
  out.push_back(query.domain);
  out.push_back("WHERE");
  for (std::size_t i = 0; i < query.constraints.size(); ++i) {
    const auto& c = query.constraints[i];
    if (i > 0) out.push_back("AND");
    out.push_back(c.slot);
    out.push_back(c.op);
    split_words(c.value, out);
  }
  return out;
}

std::vector<std::string> synthesize_sql_query(const std::string& domain,
                                              const std::map<std::string, std::string>& slots) {
  return query_tokens(make_query(QueryKind::Select, domain, slots));
}

std::vector<std::string> synthesize_book_query(const std::string& domain,
                                               const std::map<std::string, std::string>& slots) {
  return query_tokens(make_query(QueryKind::Book, domain, slots));
}

std::string render_query(const Query& query) {
  std::string out = query.kind == QueryKind::Select ? "SELECT * FROM " : "BOOK FROM ";
  out += query.domain + " WHERE ";
  for (std::size_t i = 0; i < query.constraints.size(); ++i) {
    const auto& c = query.constraints[i];
    if (i > 0) out += " AND ";
    out += c.slot + c.op + "\"" + c.value + "\"";
  }
  return out;
}

Query parse_query(std::span<const std::string> tokens) {
  std::size_t i = 0;
  auto expect = [&](const char* word) {
    if (i >= tokens.size() || tokens[i] != word) throw ParseError(std::string("expected '") + word + "' in query");
    ++i;
  };
  Query q;
  if (!tokens.empty() && tokens[0] == "SELECT") {
    q.kind = QueryKind::Select;
    expect("SELECT");
    expect("*");
  } else {
    q.kind = QueryKind::Book;
    expect("BOOK");
  }
  expect("FROM");
  if (i >= tokens.size()) throw ParseError("missing domain in query");
  q.domain = tokens[i++];
  expect("WHERE");
  while (true) {
    if (i + 3 > tokens.size()) throw ParseError("incomplete clause in query");
    Constraint c;
    c.slot = tokens[i++];
    if (is_operator(c.slot) || lower(c.slot) == "and") throw ParseError("missing slot name in query");
    c.op = tokens[i++];
    if (!is_operator(c.op)) throw ParseError("expected comparison operator after " + c.slot);
    std::vector<std::string> words;
    while (i < tokens.size() && lower(tokens[i]) != "and") words.push_back(tokens[i++]);
    if (words.empty()) throw ParseError("missing value for slot " + c.slot);
    for (std::size_t w = 0; w < words.size(); ++w) c.value += (w ? " " : "") + words[w];
    q.constraints.push_back(std::move(c));
    if (i == tokens.size()) break;
    ++i;  // AND
    if (i == tokens.size()) throw ParseError("dangling AND in query");
  }
  return q;
}

Query parse_query_text(std::string_view text) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto word = [&] {
    skip_space();
    const std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) && text[pos] != '=' &&
           text[pos] != '<' && text[pos] != '>') {
      ++pos;
    }
    return std::string(text.substr(start, pos - start));
  };

  std::vector<std::string> tokens;
  std::string head = word();
  if (head == "SELECT") {
    tokens = {"SELECT", word()};
    tokens.push_back(word());
  } else {
    tokens = {head, word()};
  }
  tokens.push_back(word());  // domain
  tokens.push_back(word());  // WHERE
  while (true) {
    skip_space();
    if (pos >= text.size()) break;
    const std::string slot = word();
    skip_space();
    if (pos >= text.size() || (text[pos] != '=' && text[pos] != '<' && text[pos] != '>')) {
      throw ParseError("expected comparison operator after " + slot);
    }
    const std::string op(1, text[pos++]);
    skip_space();
    std::string value;
    if (pos < text.size() && (text[pos] == '"' || text[pos] == '\'' || text[pos] == '`')) {
      // ``x'' and `x' close with apostrophes; "x" and 'x' close with themselves
      std::string close;
      if (text.substr(pos, 2) == "``") {
        close = "''";
        pos += 2;
      } else if (text[pos] == '`') {
        close = "'";
        ++pos;
      } else {
        close = std::string(1, text[pos]);
        ++pos;
      }
      const std::size_t end = text.find(close, pos);
      if (end == std::string_view::npos) throw ParseError("unterminated value for slot " + slot);
      value = std::string(text.substr(pos, end - pos));
      pos = end + close.size();
    } else {
      value = word();
    }
    if (value.empty()) throw ParseError("missing value for slot " + slot);
    tokens.push_back(slot);
    tokens.push_back(op);
    split_words(value, tokens);
    skip_space();
    if (pos >= text.size()) break;
    const std::string conj = word();
    if (lower(conj) != "and") throw ParseError("expected AND, found '" + conj + "'");
    tokens.push_back("AND");
  }
  return parse_query(tokens);
}

bool is_query(std::span<const std::string> tokens) {
  if (tokens.size() >= 3 && tokens[0] == "SELECT" && tokens[1] == "*" && tokens[2] == "FROM") return true;
  return tokens.size() >= 2 && tokens[0] == "BOOK" && tokens[1] == "FROM";
}

}  // namespace aop::data
