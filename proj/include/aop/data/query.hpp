#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aop::data {

// API-call targets:
//   SELECT * FROM <domain> WHERE <slot><op><value> (AND <slot><op><value>)*
//   BOOK FROM <domain> WHERE ...
// As tokens every clause is `slot op value...`; quotes only appear in the
// rendered text form.
enum class QueryKind { Select, Book };

struct Constraint {
  std::string slot;
  std::string op;     // "=", "<" or ">"
  std::string value;  // space-separated when the value spans several tokens

  bool operator==(const Constraint&) const = default;
};

struct Query {
  QueryKind kind = QueryKind::Select;
  std::string domain;
  std::vector<Constraint> constraints;

  bool operator==(const Query&) const = default;
};

// Declared slot order for a domain; LookupError for an unknown domain.
const std::vector<std::string>& domain_slots(const std::string& domain);

// arriveBy compares with "<", leaveAt with ">", everything else "=".
std::string slot_operator(const std::string& slot);

// Orders `slots` by the domain's declared order (undeclared slots follow,
// sorted by name). ContractError on an empty slot set.
Query make_query(QueryKind kind, const std::string& domain, const std::map<std::string, std::string>& slots);

std::vector<std::string> query_tokens(const Query& query);
std::vector<std::string> synthesize_sql_query(const std::string& domain, const std::map<std::string, std::string>& slots);
std::vector<std::string> synthesize_book_query(const std::string& domain, const std::map<std::string, std::string>& slots);

// Canonical text: `slot="value"` clauses with straight double quotes.
std::string render_query(const Query& query);

// Token-level parser for the grammar above. ParseError on anything else.
Query parse_query(std::span<const std::string> tokens);
// Text parser. Accepts ', ", `...', ``...'' and unquoted values, optional
// spaces around the operator and a case-insensitive AND.
Query parse_query_text(std::string_view text);

// True when `tokens` start like an API call.
bool is_query(std::span<const std::string> tokens);

}  // namespace aop::data
