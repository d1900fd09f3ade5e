#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "progslu/corpus.hpp"
#include "progslu/synth.hpp"

using namespace progslu;

namespace {

const UserInfoDictionary& bundled_dict() {
  static const UserInfoDictionary d =
      UserInfoDictionary::load(std::string(PROGSLU_DATA_DIR) + "/userinfo.dict");
  return d;
}

const Gazetteer& bundled_gaz() {
  static const Gazetteer g =
      Gazetteer::load(std::string(PROGSLU_DATA_DIR) + "/us_cities.tsv");
  return g;
}

// The corpus-sample record: round trip flights between ny and miami.
const char* kTableOneRecord =
    "#intent\tatis_flight\n"
    "#userinfo\tloc\tBrooklyn, NY\n"
    "round\tB-round_trip\n"
    "trip\tI-round_trip\n"
    "flights\tO\n"
    "between\tO\n"
    "ny\tB-fromloc\n"
    "and\tO\n"
    "miami\tB-toloc\n"
    "\n";

std::vector<Utterance> parse_str(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, bundled_dict());
}

std::string save_str(const std::vector<Utterance>& data) {
  std::ostringstream out;
  write_dataset(out, data);
  return out.str();
}

// Random well-formed IOB sequence over the given stems.
std::vector<std::string> random_iob(Rng& rng, const std::vector<std::string>& stems,
                                    std::size_t len) {
  std::vector<std::string> tags;
  while (tags.size() < len) {
    if (rng.below(2) == 0) {
      tags.push_back("O");
    } else {
      const std::string& stem = stems[rng.below(stems.size())];
      tags.push_back("B-" + stem);
      while (tags.size() < len && rng.below(3) == 0) tags.push_back("I-" + stem);
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("dictionary loading and stem matching", "[corpus]") {
  const UserInfoDictionary& d = bundled_dict();
  CHECK(d.type_names() == std::vector<std::string>{"loc", "depart_period", "arrive_period"});
  CHECK(d.type("loc").kind == DistanceKind::Geo);
  CHECK(d.type("depart_period").kind == DistanceKind::Time);

  CHECK(d.type_of_slot_stem("fromloc.city_name") == 0);
  CHECK(d.type_of_slot_stem("toloc.city_name") == 0);
  CHECK(d.type_of_slot_stem("stoploc.city_name") == 0);
  CHECK(d.type_of_slot_stem("depart_time.time") == 1);
  CHECK(d.type_of_slot_stem("depart_time.period_of_day") == 1);
  CHECK(d.type_of_slot_stem("arrive_time.time") == 2);
  CHECK(d.type_of_slot_stem("city_name") == -1);
  CHECK(d.type_of_slot_stem("airline_name") == -1);

  CHECK_THROWS_AS(UserInfoDictionary::from_entries(
                      {{"a", {DistanceKind::Geo, {"x"}}},
                       {"b", {DistanceKind::Time, {"x"}}}}),
                  ValidationError);
}

TEST_CASE("dataset round trip on the corpus-sample record", "[corpus]") {
  const auto data = parse_str(kTableOneRecord);
  REQUIRE(data.size() == 1);
  const Utterance& u = data[0];
  CHECK(u.tokens == std::vector<std::string>{"round", "trip", "flights", "between",
                                             "ny", "and", "miami"});
  CHECK(u.intent == "atis_flight");
  REQUIRE(u.user_info.size() == 1);
  CHECK(u.user_info[0].info_type == "loc");
  CHECK(u.user_info[0].content == "Brooklyn, NY");
  CHECK(u.info_tags == std::vector<std::string>{"O", "O", "O", "O", "B-loc", "O",
                                                "B-loc"});

  // save(load(x)) is byte-identical, and load(save(load(x))) matches
  const std::string saved = save_str(data);
  CHECK(saved == kTableOneRecord);
  CHECK(parse_str(saved) == data);
}

TEST_CASE("dataset parse errors", "[corpus]") {
  CHECK(parse_str("").empty());

  // a token line with three tab fields
  const std::string three_fields =
      "#intent\tatis_flight\n"
      "round\tB-round_trip\textra\n"
      "\n";
  CHECK_THROWS_MATCHES(parse_str(three_fields), ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("line 2")));

  CHECK_THROWS_AS(parse_str("flights\tO\n\n"), ParseError);       // missing #intent
  CHECK_THROWS_AS(parse_str("#intent\tx\nflights\tO\n"), ParseError);  // no blank at EOF
  CHECK_THROWS_AS(parse_str("\n"), ParseError);                   // stray blank
  CHECK_THROWS_AS(parse_str("#intent\tx\n\n"), ValidationError);  // zero tokens

  const std::string bad_iob =
      "#intent\tatis_flight\n"
      "flights\tO\n"
      "miami\tI-toloc\n"
      "\n";
  CHECK_THROWS_MATCHES(parse_str(bad_iob), ValidationError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("position 1")));

  const std::string bad_type =
      "#intent\tatis_flight\n"
      "#userinfo\thome_planet\tMars\n"
      "flights\tO\n"
      "\n";
  CHECK_THROWS_AS(parse_str(bad_type), ValidationError);
}

TEST_CASE("derive_info_sequence", "[corpus]") {
  const UserInfoDictionary& d = bundled_dict();
  Utterance u;
  u.slot_tags = {"O", "O", "O", "O", "B-fromloc", "O", "B-toloc"};
  CHECK(derive_info_sequence(u, d) ==
        std::vector<std::string>{"O", "O", "O", "O", "B-loc", "O", "B-loc"});

  u.slot_tags = {"O", "O", "O"};
  CHECK(derive_info_sequence(u, d) == std::vector<std::string>{"O", "O", "O"});

  u.slot_tags = {"B-depart_time.time", "I-depart_time.time"};
  CHECK(derive_info_sequence(u, d) ==
        std::vector<std::string>{"B-depart_period", "I-depart_period"});

  // unknown slots map to O, B/I prefixes survive
  u.slot_tags = {"B-airline_name", "I-airline_name", "B-stoploc.city_name",
                 "I-stoploc.city_name"};
  CHECK(derive_info_sequence(u, d) ==
        std::vector<std::string>{"O", "O", "B-loc", "I-loc"});
}

TEST_CASE("derived info sequences stay valid IOB with matching spans", "[corpus]") {
  const UserInfoDictionary& d = bundled_dict();
  const std::vector<std::string> stems = {
      "fromloc.city_name", "toloc.city_name", "depart_time.time",
      "airline_name",      "class_type",      "arrive_time.period_of_day"};
  Rng rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    Utterance u;
    u.slot_tags = random_iob(rng, stems, 1 + rng.below(14));
    const auto z = derive_info_sequence(u, d);
    CHECK(iob_violation(z) == std::string::npos);

    // the info spans are exactly the dictionary-owned slot spans, retyped
    std::multiset<std::tuple<int, std::size_t, std::size_t>> expected, got;
    std::size_t i = 0;
    while (i < u.slot_tags.size()) {
      if (iob_is_begin(u.slot_tags[i])) {
        std::size_t end = i + 1;
        while (end < u.slot_tags.size() && iob_is_inside(u.slot_tags[end])) ++end;
        const int ti = d.type_of_slot_stem(iob_stem(u.slot_tags[i]));
        if (ti >= 0) expected.insert({ti, i, end});
        i = end;
      } else {
        ++i;
      }
    }
    i = 0;
    while (i < z.size()) {
      if (iob_is_begin(z[i])) {
        std::size_t end = i + 1;
        while (end < z.size() && iob_is_inside(z[end])) ++end;
        got.insert({d.type_index(iob_stem(z[i])), i, end});
        i = end;
      } else {
        ++i;
      }
    }
    CHECK(expected == got);
  }
}

TEST_CASE("sample_subset", "[corpus]") {
  const auto corpus = generate_synthetic_corpus(4978, 99, bundled_gaz());

  auto all = sample_subset(corpus, corpus.size(), 7);
  CHECK(all.size() == corpus.size());

  const auto a = sample_subset(corpus, 2000, 13);
  const auto b = sample_subset(corpus, 2000, 13);
  CHECK(a == b);
  CHECK(a.size() == 2000);

  std::set<std::string> distinct;
  for (const auto& u : a) distinct.insert(detail::join(u.tokens, ' ') + u.intent);
  CHECK(distinct.size() > 1900);  // resampling without replacement, few template collisions

  // one seed defines one shuffle; a smaller draw is a prefix of a larger one
  CHECK(sample_subset(corpus, 1999, 13) ==
        std::vector<Utterance>(a.begin(), a.begin() + 1999));
  CHECK(sample_subset(corpus, 2000, 14) != a);
  CHECK_THROWS_AS(sample_subset(corpus, corpus.size() + 1, 1), ArgumentError);
}

TEST_CASE("vocab construction", "[corpus]") {
  const auto data = generate_synthetic_corpus(200, 3, bundled_gaz());
  const Vocab v = Vocab::build(data, bundled_dict());

  CHECK(v.token_id("<pad>") == Vocab::kPad);
  CHECK(v.token_id("<unk>") == Vocab::kUnk);
  CHECK(v.token_id("definitely-not-a-token") == Vocab::kUnk);
  CHECK(v.token(static_cast<std::size_t>(v.token_id("flights"))) == "flights");

  CHECK(v.slot_tag(v.slot_o_id()) == "O");
  CHECK(v.num_slot_tags_iob() + 1 == v.slot_tag_list().size());
  CHECK_THROWS_AS(v.slot_tag_id("B-made_up"), LookupError);

  CHECK(v.info_tag_list() ==
        std::vector<std::string>{"B-loc", "I-loc", "B-depart_period",
                                 "I-depart_period", "B-arrive_period",
                                 "I-arrive_period", "O"});
  CHECK(v.num_info_tags_iob() == 6);
  CHECK(v.info_tag_base_type(0) == 0);
  CHECK(v.info_tag_base_type(1) == 0);
  CHECK(v.info_tag_base_type(4) == 2);
  CHECK(v.num_intents() >= 4);
}

TEST_CASE("synthetic corpus generation", "[corpus]") {
  const Gazetteer& gaz = bundled_gaz();

  const auto one = generate_synthetic_corpus(1, 42, gaz);
  REQUIRE(one.size() == 1);
  CHECK(iob_violation(one[0].slot_tags) == std::string::npos);
  CHECK(one[0].tokens.size() == one[0].slot_tags.size());

  CHECK(generate_synthetic_corpus(20, 1, gaz) != generate_synthetic_corpus(20, 2, gaz));
  CHECK(generate_synthetic_corpus(20, 1, gaz) == generate_synthetic_corpus(20, 1, gaz));

  const auto corpus = generate_synthetic_corpus(500, 7, gaz);
  std::set<std::string> tokens, slot_labels, intents;
  for (const auto& u : corpus) {
    CHECK(u.tokens.size() == u.slot_tags.size());
    CHECK(iob_violation(u.slot_tags) == std::string::npos);
    tokens.insert(u.tokens.begin(), u.tokens.end());
    for (const auto& t : u.slot_tags)
      if (t != "O") slot_labels.insert(t);
    intents.insert(u.intent);
  }
  CHECK(tokens.size() >= 120);
  CHECK(slot_labels.size() >= 12);
  CHECK(intents.size() >= 4);
}

TEST_CASE("corpus split keeps the test set disjoint", "[corpus]") {
  auto [train, test] = generate_corpus_split(300, 100, 17, bundled_gaz());
  CHECK(train.size() == 300);
  CHECK(test.size() == 100);
  std::set<std::string> train_keys;
  for (const auto& u : train) train_keys.insert(detail::join(u.tokens, ' '));
  for (const auto& u : test) CHECK(!train_keys.count(detail::join(u.tokens, ' ')));
}

TEST_CASE("user info synthesis over a corpus", "[corpus]") {
  const Gazetteer& gaz = bundled_gaz();
  auto data = generate_synthetic_corpus(150, 23, gaz);
  synthesize_user_info(data, gaz, 5);

  std::size_t with_loc = 0, with_period = 0;
  for (const auto& u : data) {
    for (const auto& e : u.user_info) {
      if (e.info_type == "loc") {
        ++with_loc;
        // reachability: synthesized location is within 50 km of the fromloc
        auto span = find_slot_span(u, "fromloc");
        REQUIRE(span.has_value());
        const City& from = gaz.at(
            detail::join(span_tokens(u, span->first, span->second), ' '));
        CHECK(geo_distance(from, gaz.at(e.content)) <= 50.0);
      } else {
        CHECK((e.info_type == "depart_period" || e.info_type == "arrive_period"));
        ++with_period;
        CHECK(find_period(e.content) != nullptr);
      }
    }
  }
  CHECK(with_loc > 30);
  CHECK(with_period > 10);

  // round-trips through the file format
  std::ostringstream out;
  write_dataset(out, data);
  std::istringstream in(out.str());
  CHECK(parse_dataset(in, bundled_dict()) == data);
}
