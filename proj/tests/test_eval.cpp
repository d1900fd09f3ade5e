#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "progslu/eval.hpp"
#include "progslu/experiment.hpp"

using namespace progslu;

namespace {

// Exhaustive span-set oracle: tests every (type, start, end) candidate with
// a positional predicate instead of a linear scan.
std::set<std::tuple<std::string, std::size_t, std::size_t>> oracle_spans(
    const std::vector<std::string>& tags, const std::vector<std::string>& types) {
  std::set<std::tuple<std::string, std::size_t, std::size_t>> spans;
  for (const auto& ty : types)
    for (std::size_t s = 0; s < tags.size(); ++s)
      for (std::size_t e = s + 1; e <= tags.size(); ++e) {
        bool is_span = tags[s] == "B-" + ty;
        for (std::size_t k = s + 1; k < e && is_span; ++k)
          is_span = tags[k] == "I-" + ty;
        if (is_span && e < tags.size() && tags[e] == "I-" + ty) is_span = false;
        if (is_span) spans.insert({ty, s, e});
      }
  return spans;
}

double oracle_f1(const std::vector<std::string>& pred,
                 const std::vector<std::string>& gold,
                 const std::vector<std::string>& types) {
  const auto ps = oracle_spans(pred, types);
  const auto gs = oracle_spans(gold, types);
  std::size_t correct = 0;
  for (const auto& s : ps) correct += gs.count(s);
  if (ps.empty() && gs.empty()) return 0.0;
  const double p = ps.empty() ? 0.0 : double(correct) / double(ps.size());
  const double r = gs.empty() ? 0.0 : double(correct) / double(gs.size());
  return (p + r > 0) ? 2 * p * r / (p + r) : 0.0;
}

std::vector<std::string> random_valid_iob(Rng& rng,
                                          const std::vector<std::string>& types,
                                          std::size_t len) {
  std::vector<std::string> tags;
  while (tags.size() < len) {
    if (rng.below(3) == 0) {
      tags.push_back("O");
    } else {
      const auto& ty = types[rng.below(types.size())];
      tags.push_back("B-" + ty);
      while (tags.size() < len && rng.below(2) == 0) tags.push_back("I-" + ty);
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("iob repair", "[eval]") {
  std::vector<std::string> tags = {"I-loc", "I-loc", "O", "B-x", "I-y", "I-y"};
  const std::size_t fixed = repair_iob(tags);
  CHECK(fixed == 2);  // the leading I-loc and the I-y after B-x
  CHECK(tags == std::vector<std::string>{"B-loc", "I-loc", "O", "B-x", "B-y", "I-y"});
  CHECK(iob_violation(tags) == std::string::npos);

  std::vector<std::string> ok = {"B-a", "I-a", "O"};
  CHECK(repair_iob(ok) == 0);
}

TEST_CASE("span F1 basics", "[eval]") {
  const std::vector<std::string> gold = {"B-loc", "I-loc", "O", "B-t"};
  CHECK(span_f1(gold, gold).f1 == 1.0);

  const std::vector<std::string> none = {"O", "O", "O", "O"};
  CHECK(span_f1(none, gold).f1 == 0.0);
  CHECK(span_f1(none, gold).precision == 0.0);
  CHECK(span_f1(none, gold).recall == 0.0);

  // boundary miss is not a match
  const std::vector<std::string> shifted = {"B-loc", "O", "O", "B-t"};
  CHECK(span_f1(shifted, gold).f1 == Catch::Approx(0.5));

  CHECK_THROWS_AS(span_f1({"O"}, {"O", "O"}), DimensionError);
}

TEST_CASE("span F1 matches the exhaustive oracle on random sequences", "[eval]") {
  const std::vector<std::string> types = {"loc", "period", "airline"};
  Rng rng(61);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t len = 1 + rng.below(14);
    const auto pred = random_valid_iob(rng, types, len);
    const auto gold = random_valid_iob(rng, types, len);
    CHECK(span_f1(pred, gold).f1 ==
          Catch::Approx(oracle_f1(pred, gold, types)).margin(1e-12));
  }
}

TEST_CASE("span F1 is invariant under consistent type renaming", "[eval]") {
  const std::vector<std::string> types = {"a", "b"};
  Rng rng(67);
  auto rename = [](std::vector<std::string> tags) {
    for (auto& t : tags) {
      if (iob_stem(t) == "a") t = t.substr(0, 2) + "zebra";
      else if (iob_stem(t) == "b") t = t.substr(0, 2) + "yak";
    }
    return tags;
  };
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t len = 1 + rng.below(10);
    const auto pred = random_valid_iob(rng, types, len);
    const auto gold = random_valid_iob(rng, types, len);
    CHECK(span_f1(pred, gold).f1 == span_f1(rename(pred), rename(gold)).f1);
  }
}

TEST_CASE("F1 is 1 exactly when the span sets agree", "[eval]") {
  const std::vector<std::string> types = {"x", "y"};
  Rng rng(71);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t len = 2 + rng.below(10);
    auto gold = random_valid_iob(rng, types, len);
    const auto same = span_f1(gold, gold);
    if (merge_spans(gold).empty()) {
      CHECK(same.f1 == 0.0);  // no spans on either side
    } else {
      CHECK(same.f1 == 1.0);
      // perturb one position; the span sets now differ
      auto pred = gold;
      for (std::size_t i = 0; i < len; ++i)
        if (iob_is_begin(pred[i])) {
          pred[i] = "O";
          break;
        }
      repair_iob(pred);
      if (oracle_spans(pred, types) != oracle_spans(gold, types))
        CHECK(span_f1(pred, gold).f1 < 1.0);
    }
  }
}

TEST_CASE("accuracies", "[eval]") {
  CHECK(intent_accuracy({"a", "b"}, {"a", "b"}) == 1.0);
  CHECK(intent_accuracy({"a", "b"}, {"a", "x"}) == 0.5);
  CHECK_THROWS_AS(intent_accuracy({"a"}, {}), DimensionError);

  // ten-item manual count: six hits
  const std::vector<std::string> preds = {"a", "b", "c", "a", "a",
                                          "b", "c", "a", "b", "c"};
  const std::vector<std::string> golds = {"a", "b", "x", "a", "x",
                                          "b", "c", "x", "x", "c"};
  CHECK(intent_accuracy(preds, golds) == 0.6);

  CHECK(tag_accuracy({{"O", "B-x"}, {"O"}}, {{"O", "B-x"}, {"B-y"}}) ==
        Catch::Approx(2.0 / 3.0));
}

TEST_CASE("aggregation reports exact arithmetic means", "[eval]") {
  ExperimentSpec spec;
  spec.variants = {"prog"};
  spec.sizes = {100};
  spec.num_seeds = 3;
  std::vector<CellResult> cells;
  const double f1s[3] = {0.25, 0.5, 1.0};
  for (int i = 0; i < 3; ++i) {
    CellResult c;
    c.variant = "prog";
    c.size = 100;
    c.seed = static_cast<std::uint64_t>(i);
    c.metrics.slot_f1 = f1s[i];
    c.metrics.intent_acc = 0.5;
    cells.push_back(c);
  }
  const auto rows = aggregate_cells(spec, cells);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].cells == 3);
  CHECK(std::fabs(rows[0].f1_mean - (0.25 + 0.5 + 1.0) / 3.0) < 1e-12);
  CHECK(std::fabs(rows[0].intent_mean - 0.5) < 1e-12);

  // failed cells are excluded, not fatal
  cells[1].failed = true;
  const auto rows2 = aggregate_cells(spec, cells);
  CHECK(rows2[0].cells == 2);
  CHECK(std::fabs(rows2[0].f1_mean - 0.625) < 1e-12);
}

TEST_CASE("svg chart writer emits one polyline per series", "[eval]") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "progslu_chart.svg").string();
  write_svg_chart(path, "title", "x", "y",
                  {{"a", {{1, 0.5}, {2, 0.75}}}, {"b", {{1, 0.25}, {2, 0.5}}}});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++polylines;
    pos += 9;
  }
  CHECK(polylines == 2);
  fs::remove(path);
}
