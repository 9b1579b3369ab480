#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "aop/data/annotated.hpp"
#include "aop/data/corpus.hpp"
#include "aop/data/memory.hpp"
#include "aop/data/query.hpp"
#include "aop/data/skills.hpp"
#include "aop/data/synthetic.hpp"
#include "aop/errors.hpp"
#include "doctest.h"

using namespace aop::data;
using Tokens = std::vector<std::string>;

namespace {
Tokens words(const std::string& text) {
  Tokens out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}
}  // namespace

TEST_CASE("hotel SQL query from the dialogue example table") {
  const auto tokens = synthesize_sql_query("hotel", {{"type", "hotel"}, {"stars", "2"}, {"pricerange", "cheap"}});
  CHECK(tokens == words("SELECT * FROM hotel WHERE pricerange = cheap AND stars = 2 AND type = hotel"));
  const auto quoted = parse_query_text("SELECT * FROM hotel WHERE pricerange=`cheap' AND stars=2 AND type=`hotel'");
  CHECK(query_tokens(quoted) == tokens);
  CHECK(render_query(quoted) == R"(SELECT * FROM hotel WHERE pricerange="cheap" AND stars="2" AND type="hotel")");
}

TEST_CASE("train SQL query keeps the comparison operator") {
  const auto tokens = synthesize_sql_query(
      "train", {{"departure", "london"}, {"arriveBy", "1530"}, {"day", "monday"}, {"destination", "cambridge"}});
  const auto quoted = parse_query_text(
      "SELECT * FROM train WHERE destination=``cambridge'' AND day=``monday'' AND arriveBy < ``1530'' and "
      "departure=``london''");
  CHECK(query_tokens(quoted) == tokens);
  CHECK(quoted.constraints[2] == Constraint{"arriveBy", "<", "1530"});
  CHECK(render_query(quoted) ==
        R"(SELECT * FROM train WHERE destination="cambridge" AND day="monday" AND arriveBy<"1530" AND departure="london")");
}

TEST_CASE("BOOK queries") {
  CHECK(render_query(make_query(QueryKind::Book, "hotel", {{"day", "monday"}, {"people", "1"}})) ==
        R"(BOOK FROM hotel WHERE people="1" AND day="monday")");
  const auto r = synthesize_book_query("restaurant", {{"people", "4"}, {"time", "1530"}});
  CHECK(r == words("BOOK FROM restaurant WHERE time = 1530 AND people = 4"));
  CHECK(synthesize_book_query("taxi", {{"leaveAt", "1530"}}) == words("BOOK FROM taxi WHERE leaveAt > 1530"));
  CHECK_THROWS_AS(synthesize_book_query("hotel", {}), aop::ContractError);
  CHECK_THROWS_AS(synthesize_sql_query("spaceport", {{"a", "b"}}), aop::LookupError);
}

TEST_CASE("single slot has no AND and undeclared slots follow declared ones") {
  const auto one = synthesize_sql_query("attraction", {{"area", "north"}});
  CHECK(std::find(one.begin(), one.end(), "AND") == one.end());
  const auto q = make_query(QueryKind::Select, "hotel", {{"zeta", "1"}, {"alpha", "2"}, {"area", "east"}});
  CHECK(q.constraints[0].slot == "area");
  CHECK(q.constraints[1].slot == "alpha");
  CHECK(q.constraints[2].slot == "zeta");
}

TEST_CASE("query parser accepts quote styles and rejects malformed input") {
  const auto a = parse_query_text(R"(SELECT * FROM hotel WHERE name="acorn guest house" AND area='north')");
  CHECK(a.constraints[0].value == "acorn guest house");
  CHECK(a.constraints[1].value == "north");
  CHECK(parse_query(query_tokens(a)) == a);
  CHECK_THROWS_AS(parse_query_text("SELECT * FROM hotel"), aop::ParseError);
  CHECK_THROWS_AS(parse_query_text("SELECT * FROM hotel WHERE area"), aop::ParseError);
  CHECK_THROWS_AS(parse_query_text("SELECT * FROM hotel WHERE area='north' OR stars=2"), aop::ParseError);
  CHECK_THROWS_AS(parse_query_text("DELETE FROM hotel WHERE a=b"), aop::ParseError);
  CHECK_THROWS_AS(parse_query(words("BOOK FROM hotel WHERE people = 1 AND")), aop::ParseError);
  CHECK(is_query(words("BOOK FROM x")));
  CHECK_FALSE(is_query(words("SELECT the hotel")));
}

TEST_CASE("memory population rules") {
  std::vector<MemoryRecord> rows;
  for (int i = 0; i < 7; ++i) rows.push_back(MemoryRecord({{"name", "h" + std::to_string(i)}, {"area", i % 2 ? "north" : "south"}}));
  CHECK(populate_memory(rows, {}).tokens == Tokens{"<TM>"});

  const std::vector<MemoryRecord> three(rows.begin(), rows.begin() + 3);
  const auto flat = populate_memory(three, {});
  CHECK(flat.tokens == words("name h0 area south name h1 area north name h2 area south"));
  CHECK(flat.types[1] == "name");
  CHECK(flat.types[3] == "area");
  CHECK(flat.segments.back() == "rec2");

  const SpeechAct inform{"INFORM", "hotel", {{"area", "north"}}};
  CHECK(inform.tag() == "INFORM-HOTEL");
  const auto filtered = populate_memory(rows, {inform});
  CHECK(filtered.tokens == words("name h1 area north name h3 area north name h5 area north"));

  std::vector<MemoryRecord> many;
  for (int i = 0; i < 9; ++i) many.push_back(MemoryRecord({{"name", "x" + std::to_string(i)}}));
  const auto capped = populate_memory(many, {SpeechAct{"RECOMMEND", "hotel", {}}});
  CHECK(capped.tokens.size() == 10);

  CHECK(booking_memory(std::nullopt).tokens == Tokens{"Not_Available"});
  CHECK(booking_memory(MemoryRecord(Fields{{"reference", "abc123"}})).tokens == words("reference abc123"));
  CHECK_THROWS_AS(MemoryRecord({{"a", "1"}, {"a", "2"}}), aop::ContractError);
}

TEST_CASE("API calls are issued only for informing acts with fresh state") {
  AnnotatedTurn turn;
  turn.state["hotel"] = {{"pricerange", "cheap"}, {"stars", "2"}};
  turn.acts = {SpeechAct{"INFORM", "hotel", {}}};
  const DialogueState before = {{"hotel", {{"pricerange", "cheap"}}}};
  CHECK(should_issue_api(turn, before, {}));
  const auto q = candidate_query(turn, before);
  REQUIRE(q);
  CHECK(render_query(*q) == R"(SELECT * FROM hotel WHERE pricerange="cheap" AND stars="2")");
  CHECK_FALSE(should_issue_api(turn, before, {render_query(*q)}));
  CHECK_FALSE(should_issue_api(turn, turn.state, {}));
  turn.acts = {SpeechAct{"REQUEST", "hotel", {}}};
  CHECK_FALSE(should_issue_api(turn, before, {}));
}

TEST_CASE("skill vectors") {
  const auto layout = SkillLayout::full();
  CHECK(layout.size() == 13);
  auto v = build_skill_vector(TargetKind::Sql, "hotel", layout);
  CHECK(layout.decode(v) == Tokens{"SQL", "Hotel"});
  CHECK(layout.decode(build_skill_vector(TargetKind::ChitChat, "", layout)) == Tokens{"Persona"});
  CHECK(layout.decode(build_skill_vector(TargetKind::Book, "train", layout)) == Tokens{"BOOK", "Train"});
  CHECK(layout.decode(build_skill_vector(TargetKind::Response, "taxi", layout)) == Tokens{"Taxi"});
  CHECK_THROWS_AS(build_skill_vector(TargetKind::Sql, "spaceport", layout), aop::LookupError);
  CHECK_THROWS_AS(SkillLayout({"SQL", "Cooking"}), aop::LookupError);
  CHECK_THROWS_AS(SkillLayout({"SQL", "SQL"}), aop::ContractError);
}

TEST_CASE("synthetic corpus: determinism, grammar, balance, skill bits") {
  const SyntheticSizes sizes{400, 40, 40};
  const auto a = generate_synthetic_corpus(17, sizes);
  const auto b = generate_synthetic_corpus(17, sizes);
  CHECK(a.data.train == b.data.train);
  CHECK(a.data.test == b.data.test);
  const auto c = generate_synthetic_corpus(18, sizes);
  CHECK_FALSE(a.data.train == c.data.train);

  const SkillLayout layout(synthetic_skill_names());
  CHECK(corpus_skills(a.data.train) == layout);
  std::map<std::string, std::size_t> kinds, domains;
  std::size_t queries = 0;
  for (const auto* split : {&a.data.train, &a.data.valid, &a.data.test}) {
    for (const auto& e : *split) {
      e.validate(layout);
      ++kinds[example_kind(e)];
      ++domains[example_domain(e)];
      if (is_query(e.target)) {
        ++queries;
        CHECK_NOTHROW(parse_query(e.target));
        CHECK(e.skills.size() == 2);
        CHECK((e.skills[0] == "SQL" || e.skills[0] == "BOOK"));
      } else {
        CHECK(e.skills.size() >= 1);
      }
      CHECK(e.memory.size() <= 5 * 6 * 2);
    }
  }
  CHECK(queries == 240);
  for (const auto& [kind, count] : kinds) {
    CAPTURE(kind);
    CHECK(std::abs(static_cast<double>(count) / 480.0 - 0.25) <= 0.05 * 0.25);
  }
  CHECK(domains["hotel"] == domains["train"]);
  CHECK(a.lexicon.entries().count("cambridge"));
}

TEST_CASE("corpus files round-trip and report bad lines") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "aop_corpus_test.jsonl";
  const auto corpus = generate_synthetic_corpus(3, {40, 4, 4});
  save_corpus(path, corpus.data.train);
  CHECK(load_corpus(path) == corpus.data.train);

  { std::ofstream(path, std::ios::trunc); }
  CHECK(load_corpus(path).empty());

  {
    std::ofstream out(path, std::ios::trunc);
    out << example_to_json(corpus.data.train[0]) << "\n";
    auto bad = corpus.data.train[1];
    bad.skills = {"Cooking"};
    out << example_to_json(bad) << "\n";
  }
  try {
    load_corpus(path);
    FAIL("expected a parse error");
  } catch (const aop::ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("Cooking") != std::string::npos);
  }
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{not json\n";
  }
  CHECK_THROWS_AS(load_corpus(path), aop::ParseError);

  const auto lex_path = dir / "aop_lexicon_test.json";
  corpus.lexicon.save(lex_path);
  CHECK(EntityLexicon::load(lex_path).entries() == corpus.lexicon.entries());
  std::filesystem::remove(path);
  std::filesystem::remove(lex_path);
}

TEST_CASE("annotated dialogues become training examples") {
  const auto path = std::filesystem::temp_directory_path() / "aop_annotated.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id": "d1", "turns": [)"
        << R"({"speaker": "usr", "text": "a cheap hotel in the north please"},)"
        << R"({"speaker": "sys", "text": "avalon is cheap", "state": {"hotel": {"area": "north", "pricerange": "cheap"}},)"
        << R"( "acts": [{"act": "RECOMMEND", "domain": "hotel", "values": [["name", "avalon"]]}],)"
        << R"( "results": [[["name", "avalon"], ["area", "north"]], [["name", "acorn"], ["area", "north"]]]},)"
        << R"({"speaker": "usr", "text": "book it for 2 people"},)"
        << R"({"speaker": "sys", "text": "booked , ref x1", "state": {"hotel": {"area": "north", "pricerange": "cheap"}},)"
        << R"( "acts": [{"act": "BOOK", "domain": "hotel"}], "book": {"people": "2"}, "booking": [["ref", "x1"]]}]})"
        << "\n\n";
  }
  const auto dialogues = load_annotated_dialogues(path);
  REQUIRE(dialogues.size() == 1);
  const auto ex = dialogue_examples(dialogues.front());
  REQUIRE(ex.size() == 4);
  CHECK(ex[0].id == "d1-0-sql");
  CHECK(ex[0].target == words("SELECT * FROM hotel WHERE pricerange = cheap AND area = north"));
  CHECK(ex[0].skills == Tokens{"SQL", "Hotel"});
  CHECK(ex[0].memory.empty());
  CHECK(ex[1].memory == words("name avalon area north"));
  CHECK(ex[1].skills == Tokens{"Hotel"});
  CHECK(ex[2].target == words("BOOK FROM hotel WHERE people = 2"));
  CHECK(ex[2].skills == Tokens{"BOOK", "Hotel"});
  CHECK(ex[3].memory == words("ref x1"));
  CHECK(ex[3].history.size() == 7 + 3 + 5);
  for (const auto& e : ex) CHECK_NOTHROW(e.validate(SkillLayout::full()));
  std::filesystem::remove(path);

  {
    std::ofstream out(path);
    out << R"({"turns": [{"speaker": "sys", "text": "hi"}]})" << "\n";
  }
  CHECK_THROWS_AS(load_annotated_dialogues(path), aop::ParseError);
  std::filesystem::remove(path);
}
