#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "progslu/distill.hpp"
#include "progslu/synth.hpp"

using namespace progslu;

namespace {

const UserInfoDictionary& dict() {
  static const UserInfoDictionary d =
      UserInfoDictionary::load(std::string(PROGSLU_DATA_DIR) + "/userinfo.dict");
  return d;
}

const Gazetteer& gaz() {
  static const Gazetteer g =
      Gazetteer::load(std::string(PROGSLU_DATA_DIR) + "/us_cities.tsv");
  return g;
}

double oracle_km(const City& a, const City& b) {
  auto rad = [](double d) { return d * M_PI / 180.0; };
  const double u = std::sin(rad(b.latitude - a.latitude) / 2);
  const double v = std::sin(rad(b.longitude - a.longitude) / 2);
  return 2 * 6371.0 *
         std::asin(std::sqrt(u * u + v * v * std::cos(rad(a.latitude)) *
                                         std::cos(rad(b.latitude))));
}

}  // namespace

TEST_CASE("merge_spans", "[distill]") {
  CHECK(merge_spans({"B-loc", "I-loc", "O", "B-loc"}) ==
        std::vector<Span>{{"loc", 0, 2}, {"loc", 3, 4}});
  CHECK(merge_spans({"O", "O", "O"}).empty());
  CHECK(merge_spans({"B-loc", "B-loc", "B-loc", "B-loc", "B-loc"}).size() == 5);
  CHECK_THROWS_AS(merge_spans({"O", "I-loc"}), ValidationError);
}

TEST_CASE("merge then expand reproduces the tags", "[distill]") {
  Rng rng(19);
  const std::vector<std::string> types = {"loc", "depart_period", "arrive_period"};
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t len = 1 + rng.below(12);
    std::vector<std::string> tags;
    while (tags.size() < len) {
      if (rng.below(2) == 0) {
        tags.push_back("O");
      } else {
        const std::string& ty = types[rng.below(types.size())];
        tags.push_back("B-" + ty);
        while (tags.size() < len && rng.below(3) == 0) tags.push_back("I-" + ty);
      }
    }
    CHECK(expand_spans(merge_spans(tags), tags.size()) == tags);
  }
}

TEST_CASE("compute_delta geo spans", "[distill]") {
  Utterance u;
  u.tokens = {"flights", "from", "new", "york", "to", "miami"};
  u.slot_tags = {"O", "O", "B-fromloc.city_name", "I-fromloc.city_name",
                 "O", "B-toloc.city_name"};
  u.user_info = {{"loc", "Brooklyn, NY"}};
  u.info_tags = derive_info_sequence(u, dict());

  const auto table =
      compute_delta(u, merge_spans(u.info_tags), u.user_info, dict(), gaz());

  const double expected = oracle_km(gaz().at("new york"), gaz().at("Brooklyn, NY"));
  CHECK(table.raw_at(2, 0) == Catch::Approx(expected).margin(1e-9));
  CHECK(table.at(2, 0) == Catch::Approx(expected / 100.0).margin(1e-9));
  CHECK(table.at(2, 0) == Catch::Approx(0.0844).margin(0.002));

  // B- and I- positions of one span share the value
  CHECK(table.raw_at(2, 0) == table.raw_at(3, 0));
  CHECK(table.at(2, 0) == table.at(3, 0));

  // the toloc span measures against the same user location
  const double miami = oracle_km(gaz().at("miami"), gaz().at("Brooklyn, NY"));
  CHECK(table.raw_at(5, 0) == Catch::Approx(miami).margin(1e-9));

  // a loc-typed span queried for a time type is a mismatch
  CHECK(table.at(2, 1) == -1.0);
  CHECK(table.at(2, 2) == -1.0);
  // O tokens carry no distance at all
  CHECK(table.at(0, 0) == -1.0);
}

TEST_CASE("compute_delta time spans", "[distill]") {
  Utterance u;
  u.tokens = {"leave", "at", "9", "pm", "arriving", "in", "the", "morning"};
  u.slot_tags = {"O", "O", "B-depart_time.time", "I-depart_time.time",
                 "O", "O", "O", "B-arrive_time.period_of_day"};
  u.user_info = {{"depart_period", "evening"}, {"arrive_period", "morning"}};
  u.info_tags = derive_info_sequence(u, dict());

  const auto table =
      compute_delta(u, merge_spans(u.info_tags), u.user_info, dict(), gaz());

  // "9 pm" is 1260 minutes, exactly the evening midpoint
  CHECK(table.raw_at(2, 1) == 0.0);
  CHECK(table.at(2, 1) == 0.0);
  CHECK(table.raw_at(3, 1) == 0.0);

  // a period-of-day span measures middle to middle
  CHECK(table.raw_at(7, 2) == 0.0);

  CHECK(table.at(2, 0) == -1.0);  // no geo reading for a time span
}

TEST_CASE("compute_delta circular time distance", "[distill]") {
  Utterance u;
  u.tokens = {"leave", "at", "1", "am"};
  u.slot_tags = {"O", "O", "B-depart_time.time", "I-depart_time.time"};
  u.user_info = {{"depart_period", "evening"}};  // middle 1260
  u.info_tags = derive_info_sequence(u, dict());
  const auto table =
      compute_delta(u, merge_spans(u.info_tags), u.user_info, dict(), gaz());
  // 60 vs 1260: clockwise 240, not 1200
  CHECK(table.raw_at(2, 1) == 240.0);
  CHECK(table.at(2, 1) == Catch::Approx(240.0 / 360.0).margin(1e-12));
}

TEST_CASE("compute_delta is invariant to user info order", "[distill]") {
  Utterance u;
  u.tokens = {"from", "boston", "at", "838", "am"};
  u.slot_tags = {"O", "B-fromloc.city_name", "O", "B-depart_time.time",
                 "I-depart_time.time"};
  u.user_info = {{"loc", "Cambridge,MA"}, {"depart_period", "morning"}};
  u.info_tags = derive_info_sequence(u, dict());
  const auto spans = merge_spans(u.info_tags);

  auto t1 = compute_delta(u, spans, u.user_info, dict(), gaz());
  std::reverse(u.user_info.begin(), u.user_info.end());
  auto t2 = compute_delta(u, spans, u.user_info, dict(), gaz());
  CHECK(t1.raw == t2.raw);
  CHECK(t1.normalized == t2.normalized);

  // duplicate entries of one type: the lexicographically smallest content wins
  u.user_info = {{"loc", "Somerville,MA"}, {"loc", "Cambridge,MA"}};
  auto t3 = compute_delta(u, spans, u.user_info, dict(), gaz());
  std::swap(u.user_info[0], u.user_info[1]);
  auto t4 = compute_delta(u, spans, u.user_info, dict(), gaz());
  CHECK(t3.raw == t4.raw);
  CHECK(t3.raw_at(1, 0) ==
        Catch::Approx(oracle_km(gaz().at("boston"), gaz().at("Cambridge,MA")))
            .margin(1e-9));
}

TEST_CASE("compute_delta leaves unresolvable spans at -1", "[distill]") {
  Utterance u;
  u.tokens = {"from", "gotham"};
  u.slot_tags = {"O", "B-fromloc.city_name"};
  u.user_info = {{"loc", "Brooklyn, NY"}};
  u.info_tags = derive_info_sequence(u, dict());
  std::vector<std::string> log;
  const auto table =
      compute_delta(u, merge_spans(u.info_tags), u.user_info, dict(), gaz(), &log);
  CHECK(table.at(1, 0) == -1.0);
  CHECK(log.size() == 1);

  // nonnegative delta happens only inside a span of that type
  for (std::size_t t = 0; t < table.num_tokens; ++t)
    for (std::size_t j = 0; j < table.num_types; ++j)
      CHECK(table.at(t, j) == -1.0);
}

TEST_CASE("distance_features", "[distill]") {
  ad::Tensor beta = make_beta(2, 3);
  PriorDistanceTable table(1, 2);
  table.set(0, 0, 0.0, 0.0);  // matched span at zero distance; (0,1) stays -1

  ad::Tape tape;
  auto d = distance_features(tape, beta, table, 0);
  REQUIRE(d.size() == 2);
  for (double v : d[0].value()) CHECK(v == 0.5);  // sigmoid(0)
  for (double v : d[1].value())
    CHECK(v == Catch::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));  // sigmoid(-2)

  CHECK_THROWS_AS(distance_features(tape, beta, PriorDistanceTable(1, 3), 0),
                  DimensionError);
}

TEST_CASE("distance_features gradient flows into beta", "[distill]") {
  ad::Tensor beta = make_beta(3, 4);
  PriorDistanceTable table(2, 3);
  table.set(0, 0, 49.9, 0.499);
  table.set(1, 2, 130.0, 130.0 / 360.0);

  auto report = ad::grad_check(
      [&](ad::Tape& t) {
        ad::Tensor total = ad::sum(t, distance_features(t, beta, table, 0)[0]);
        for (std::size_t j = 1; j < 3; ++j)
          total = ad::add(t, total,
                          ad::sum(t, distance_features(t, beta, table, 1)[j]));
        return total;
      },
      {{"beta", beta}});
  CHECK(report.max_rel_err < 1e-6);
}
