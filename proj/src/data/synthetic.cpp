#include "aop/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <sstream>

#include "aop/data/memory.hpp"
#include "aop/data/query.hpp"
#include "aop/errors.hpp"
#include "aop/rng.hpp"

namespace aop::data {

namespace {

using Tokens = std::vector<std::string>;

const Tokens kHotelNames = {"acorn_guest_house", "alexander_bnb",  "allenbell",       "arbury_lodge",
                            "ashley_hotel",      "autumn_house",   "avalon",          "bridge_guest_house",
                            "carolina_bnb",      "cityroomz",      "el_shaddai",      "finches_bnb",
                            "gonville_hotel",    "hamilton_lodge", "hobsons_house",   "huntingdon_marriott",
                            "kirkwood_house",    "lensfield_hotel", "limehouse",      "warkworth_house"};
const Tokens kAreas = {"north", "south", "east", "west", "centre"};
const Tokens kPrices = {"cheap", "moderate", "expensive"};
const Tokens kStars = {"1", "2", "3", "4", "5"};
const Tokens kHotelTypes = {"hotel", "guesthouse"};
const Tokens kPlaces = {"cambridge", "london", "ely",        "norwich",   "stevenage",
                        "peterborough", "birmingham", "leicester", "kings_lynn", "broxbourne"};
const Tokens kDays = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
const Tokens kGreetings[] = {{"hello", ",", "how", "can", "i", "help", "you", "?"},
                             {"hi", "!", "what", "can", "i", "do", "for", "you", "?"},
                             {"welcome", ",", "how", "may", "i", "help", "?"}};

struct PersonaTopic {
  Tokens question;
  Tokens prefix;
  Tokens objects;
};

const std::vector<PersonaTopic>& persona_topics() {
  static const std::vector<PersonaTopic> topics = {
      {{"what", "do", "you", "do", "for", "work", "?"}, {"i", "work", "as", "a"},
       {"teacher", "nurse", "pilot", "chef", "farmer", "lawyer"}},
      {{"do", "you", "have", "any", "pets", "?"}, {"i", "have", "a"}, {"dog", "cat", "parrot", "horse", "rabbit"}},
      {{"what", "do", "you", "do", "for", "fun", "?"}, {"i", "like", "to"},
       {"swim", "paint", "hike", "dance", "cook", "read"}},
      {{"what", "is", "your", "favorite", "food", "?"}, {"my", "favorite", "food", "is"},
       {"pizza", "sushi", "pasta", "tacos", "curry"}},
      {{"where", "do", "you", "live", "?"}, {"i", "live", "in"}, {"paris", "tokyo", "boston", "madrid", "sydney"}},
      {{"what", "music", "do", "you", "like", "?"}, {"i", "listen", "to"}, {"jazz", "rock", "opera", "reggae", "blues"}},
  };
  return topics;
}

Tokens concat(std::initializer_list<Tokens> parts) {
  Tokens out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

class Builder {
 public:
  Builder(Rng& rng, EntityLexicon& lex) : rng_(rng), lex_(lex) {}

  DialogueExample make(const std::string& kind, const std::string& domain) {
    DialogueExample e;
    turn(e, "Sys", kGreetings[rng_.below(3)]);
    MemoryContent memory;
    TargetKind target_kind = TargetKind::Response;
    if (kind == "sql") {
      target_kind = TargetKind::Sql;
      e.target = domain == "hotel" ? hotel_sql(e) : train_sql(e);
    } else if (kind == "book") {
      target_kind = TargetKind::Book;
      e.target = domain == "hotel" ? hotel_book(e, memory) : train_book(e, memory);
    } else if (kind == "lookup") {
      e.target = domain == "hotel" ? hotel_lookup(e, memory) : train_lookup(e, memory);
    } else {
      target_kind = TargetKind::ChitChat;
      e.target = persona(e, memory);
    }
    e.memory = memory.tokens;
    e.types.insert(e.types.end(), memory.types.begin(), memory.types.end());
    e.segments.insert(e.segments.end(), memory.segments.begin(), memory.segments.end());
    e.skills = target_skills(target_kind, domain);
    return e;
  }

 private:
  void turn(DialogueExample& e, const std::string& speaker, const Tokens& tokens) {
    const std::string segment = "turn" + std::to_string(turns_++ % 2);
    for (const auto& t : tokens) {
      e.history.push_back(t);
      e.types.push_back(speaker);
      e.segments.push_back(segment);
    }
  }

  const std::string& pick(const Tokens& pool) { return pool[rng_.below(pool.size())]; }

  // Random non-empty subset of `slots`, keeping at most `max_size`.
  std::vector<std::string> subset(std::vector<std::string> slots, std::size_t max_size) {
    rng_.shuffle(slots);
    slots.resize(1 + rng_.below(std::min(max_size, slots.size())));
    return slots;
  }

  Tokens shuffled_fragments(std::vector<Tokens> fragments) {
    rng_.shuffle(fragments);
    Tokens out;
    for (const auto& f : fragments) out.insert(out.end(), f.begin(), f.end());
    return out;
  }

  MemoryRecord hotel_record() {
    const auto& name = pick(kHotelNames);
    std::string phone = "01223";
    for (int i = 0; i < 6; ++i) phone += static_cast<char>('0' + rng_.below(10));
    MemoryRecord r({{"name", name},
                    {"area", pick(kAreas)},
                    {"pricerange", pick(kPrices)},
                    {"stars", pick(kStars)},
                    {"type", pick(kHotelTypes)},
                    {"phone", phone}});
    for (const char* attr : {"name", "area", "pricerange", "type", "phone"}) lex_.add(*r.get(attr), "hotel");
    return r;
  }

  std::string time_of_day() {
    static const std::array<const char*, 4> minutes = {"00", "15", "30", "45"};
    const auto hour = 5 + rng_.below(19);
    return (hour < 10 ? "0" : "") + std::to_string(hour) + minutes[rng_.below(4)];
  }

  MemoryRecord train_record() {
    std::string id = "tr";
    for (int i = 0; i < 4; ++i) id += static_cast<char>('0' + rng_.below(10));
    const auto& from = pick(kPlaces);
    std::string to = pick(kPlaces);
    while (to == from) to = pick(kPlaces);
    std::string leave = time_of_day(), arrive = time_of_day();
    if (arrive < leave) std::swap(leave, arrive);
    MemoryRecord r({{"id", id},
                    {"departure", from},
                    {"destination", to},
                    {"day", pick(kDays)},
                    {"leaveAt", leave},
                    {"arriveBy", arrive}});
    for (const auto& [attr, value] : r.fields) lex_.add(value, "train");
    return r;
  }

  Tokens hotel_sql(DialogueExample& e) {
    static const Tokens heads[] = {{"i", "am", "looking", "for", "a", "hotel"},
                                   {"find", "me", "a", "place", "to", "stay"},
                                   {"search", "for", "a", "hotel"}};
    std::map<std::string, std::string> slots;
    std::vector<Tokens> fragments;
    for (const auto& slot : subset({"pricerange", "stars", "type", "area"}, 3)) {
      if (slot == "pricerange") {
        slots[slot] = pick(kPrices);
        fragments.push_back({"in", "the", slots[slot], "price", "range"});
      } else if (slot == "stars") {
        slots[slot] = pick(kStars);
        fragments.push_back({"with", slots[slot], "stars"});
      } else if (slot == "type") {
        slots[slot] = pick(kHotelTypes);
        fragments.push_back({"of", "type", slots[slot]});
      } else {
        slots[slot] = pick(kAreas);
        fragments.push_back({"in", "the", slots[slot]});
      }
    }
    turn(e, "Usr", concat({heads[rng_.below(3)], shuffled_fragments(fragments), {"."}}));
    return synthesize_sql_query("hotel", slots);
  }

  Tokens train_sql(DialogueExample& e) {
    static const Tokens heads[] = {{"i", "am", "looking", "for", "a", "train"},
                                   {"find", "me", "a", "train"},
                                   {"search", "for", "a", "train", "ticket"}};
    std::map<std::string, std::string> slots;
    std::vector<Tokens> fragments;
    for (const auto& slot : subset({"destination", "day", "arriveBy", "departure", "leaveAt"}, 3)) {
      if (slot == "destination") {
        slots[slot] = pick(kPlaces);
        fragments.push_back({"to", slots[slot]});
      } else if (slot == "departure") {
        slots[slot] = pick(kPlaces);
        fragments.push_back({"from", slots[slot]});
      } else if (slot == "day") {
        slots[slot] = pick(kDays);
        fragments.push_back({"on", slots[slot]});
      } else if (slot == "arriveBy") {
        slots[slot] = time_of_day();
        fragments.push_back({"arriving", "by", slots[slot]});
      } else {
        slots[slot] = time_of_day();
        fragments.push_back({"leaving", "after", slots[slot]});
      }
    }
    turn(e, "Usr", concat({heads[rng_.below(3)], shuffled_fragments(fragments), {"."}}));
    return synthesize_sql_query("train", slots);
  }

  Tokens hotel_book(DialogueExample& e, MemoryContent& memory) {
    static const Tokens heads[] = {{"please", "book", "it"}, {"can", "you", "reserve", "it"}, {"book", "a", "room"}};
    const auto record = hotel_record();
    memory = booking_memory(record);
    turn(e, "Sys", {*record.get("name"), "is", "a", *record.get("pricerange"), *record.get("type"), "in", "the",
                    *record.get("area"), "."});
    std::map<std::string, std::string> slots;
    std::vector<Tokens> fragments;
    for (const auto& slot : subset({"people", "day", "stay"}, 3)) {
      if (slot == "people") {
        slots[slot] = std::to_string(1 + rng_.below(8));
        fragments.push_back({"for", slots[slot], "people"});
      } else if (slot == "day") {
        slots[slot] = pick(kDays);
        fragments.push_back({"starting", slots[slot]});
      } else {
        slots[slot] = std::to_string(1 + rng_.below(5));
        fragments.push_back({"for", slots[slot], "nights"});
      }
    }
    for (const auto& [slot, value] : slots) {
      if (slot == "day") lex_.add(value, "hotel");
    }
    turn(e, "Usr", concat({heads[rng_.below(3)], shuffled_fragments(fragments), {"."}}));
    return synthesize_book_query("hotel", slots);
  }

  Tokens train_book(DialogueExample& e, MemoryContent& memory) {
    static const Tokens heads[] = {{"please", "book", "it"}, {"can", "you", "reserve", "seats"}, {"book", "tickets"}};
    const auto record = train_record();
    memory = booking_memory(record);
    turn(e, "Sys", {*record.get("id"), "leaves", *record.get("departure"), "at", *record.get("leaveAt"), "."});
    const std::string people = std::to_string(1 + rng_.below(8));
    turn(e, "Usr", concat({heads[rng_.below(3)], {"for", people, "people", "."}}));
    return synthesize_book_query("train", {{"people", people}, {"id_booking", *record.get("id")}});
  }

  Tokens hotel_lookup(DialogueExample& e, MemoryContent& memory) {
    std::vector<MemoryRecord> records;
    const std::size_t k = 2 + rng_.below(3);
    while (records.size() < k) {
      auto r = hotel_record();
      const bool dup = std::any_of(records.begin(), records.end(), [&](const auto& o) { return o.get("name") == r.get("name"); });
      if (!dup) records.push_back(std::move(r));
    }
    memory = populate_memory(records, {});
    turn(e, "Sys", {"i", "found", std::to_string(k), "hotels", "for", "you", "."});
    const auto& r = records[rng_.below(k)];
    const std::string name = *r.get("name");
    switch (rng_.below(3)) {
      case 0:
        turn(e, "Usr", {"what", "is", "the", "phone", "number", "of", name, "?"});
        return {"the", "phone", "number", "of", name, "is", *r.get("phone"), "."};
      case 1:
        turn(e, "Usr", {"what", "area", "is", name, "in", "?"});
        return {name, "is", "in", "the", *r.get("area"), "."};
      default:
        turn(e, "Usr", {"how", "many", "stars", "does", name, "have", "?"});
        return {name, "has", *r.get("stars"), "stars", "."};
    }
  }

  Tokens train_lookup(DialogueExample& e, MemoryContent& memory) {
    std::vector<MemoryRecord> records;
    const std::size_t k = 2 + rng_.below(3);
    for (std::size_t i = 0; i < k; ++i) records.push_back(train_record());
    memory = populate_memory(records, {});
    turn(e, "Sys", {"there", "are", std::to_string(k), "trains", "."});
    const auto& r = records[rng_.below(k)];
    const std::string id = *r.get("id");
    switch (rng_.below(3)) {
      case 0:
        turn(e, "Usr", {"when", "does", id, "leave", "?"});
        return {id, "leaves", "at", *r.get("leaveAt"), "."};
      case 1:
        turn(e, "Usr", {"when", "does", id, "arrive", "?"});
        return {id, "arrives", "by", *r.get("arriveBy"), "."};
      default:
        turn(e, "Usr", {"where", "does", id, "go", "?"});
        return {id, "goes", "to", *r.get("destination"), "."};
    }
  }

  Tokens persona(DialogueExample& e, MemoryContent& memory) {
    std::vector<std::size_t> topics(persona_topics().size());
    for (std::size_t i = 0; i < topics.size(); ++i) topics[i] = i;
    rng_.shuffle(topics);
    topics.resize(4);
    std::vector<Tokens> sentences;
    for (std::size_t i = 0; i < topics.size(); ++i) {
      const auto& t = persona_topics()[topics[i]];
      sentences.push_back(concat({t.prefix, {pick(t.objects)}, {"."}}));
      for (const auto& w : sentences.back()) {
        memory.tokens.push_back(w);
        memory.types.push_back("persona");
        memory.segments.push_back("rec" + std::to_string(i));
      }
    }
    const std::size_t asked = rng_.below(topics.size());
    turn(e, "Usr", persona_topics()[topics[asked]].question);
    return sentences[asked];
  }

  Rng& rng_;
  EntityLexicon& lex_;
  std::size_t turns_ = 0;
};

const std::array<const char*, 4> kKinds = {"sql", "book", "lookup", "persona"};

std::vector<DialogueExample> make_split(const std::string& name, std::size_t count, Rng& rng, EntityLexicon& lex) {
  std::vector<DialogueExample> out;
  std::size_t domain_turn[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = i % kKinds.size();
    const std::string kind = kKinds[k];
    const std::string domain = kind == std::string("persona") ? "persona" : synthetic_domains()[domain_turn[k]++ % 2];
    Builder builder(rng, lex);
    auto e = builder.make(kind, domain);
    e.id = kind + "-" + domain;
    out.push_back(std::move(e));
  }
  rng.shuffle(out);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::ostringstream id;
    id << name << '-' << i << '-' << out[i].id;
    out[i].id = id.str();
  }
  return out;
}

std::string id_field(const DialogueExample& e, std::size_t index) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < index; ++i) {
    start = e.id.find('-', start);
    if (start == std::string::npos) throw ContractError("example id does not encode kind and domain: " + e.id);
    ++start;
  }
  const auto end = e.id.find('-', start);
  return e.id.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

const std::vector<std::string>& synthetic_skill_names() {
  static const std::vector<std::string> names = {"SQL", "BOOK", "Hotel", "Train", "Persona"};
  return names;
}

const std::vector<std::string>& synthetic_domains() {
  static const std::vector<std::string> domains = {"hotel", "train"};
  return domains;
}

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, const SyntheticSizes& sizes) {
  if (sizes.train == 0 || sizes.valid == 0 || sizes.test == 0) throw ContractError("split sizes must be positive");
  SyntheticCorpus c;
  Rng rng(seed);
  for (const auto& v : kAreas) c.lexicon.add(v, "hotel");
  for (const auto& v : kPrices) c.lexicon.add(v, "hotel");
  for (const auto& v : kHotelNames) c.lexicon.add(v, "hotel");
  for (const auto& v : kPlaces) c.lexicon.add(v, "train");
  c.data.train = make_split("train", sizes.train, rng, c.lexicon);
  c.data.valid = make_split("valid", sizes.valid, rng, c.lexicon);
  c.data.test = make_split("test", sizes.test, rng, c.lexicon);
  return c;
}

std::string example_kind(const DialogueExample& example) { return id_field(example, 2); }
std::string example_domain(const DialogueExample& example) { return id_field(example, 3); }

}  // namespace aop::data
