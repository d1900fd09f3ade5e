#pragma once

// Synthetic flight-domain corpus generation and offline user-info synthesis
// (contextual location from the gazetteer, preferred day periods from tagged
// times).

#include <optional>
#include <string>
#include <vector>

#include "progslu/corpus.hpp"
#include "progslu/gazetteer.hpp"

namespace progslu {

namespace detail {

struct TemplatePiece {
  bool is_slot = false;
  std::string text;  // literal token, or slot key
};

struct UtteranceTemplate {
  std::string intent;
  std::vector<TemplatePiece> pieces;
};

// "{from_city}" style placeholders, everything else literal tokens.
inline UtteranceTemplate make_template(const std::string& intent,
                                       const std::string& pattern) {
  UtteranceTemplate t;
  t.intent = intent;
  for (const auto& word : split(pattern, ' ')) {
    if (word.empty()) continue;
    if (word.front() == '{' && word.back() == '}')
      t.pieces.push_back({true, word.substr(1, word.size() - 2)});
    else
      t.pieces.push_back({false, word});
  }
  return t;
}

inline const std::vector<UtteranceTemplate>& corpus_templates() {
  static const std::vector<UtteranceTemplate> templates = {
      make_template("atis_flight", "i need a flight from {from_city} to {to_city}"),
      make_template("atis_flight", "show me flights from {from_city} to {to_city} on {day}"),
      make_template("atis_flight", "round trip flights between {from_city} and {to_city}"),
      make_template("atis_flight", "all flights to {to_city} after {dep_time}"),
      make_template("atis_flight",
                    "i want to fly from {from_city} at {dep_time} and arrive in {to_city} at {arr_time}"),
      make_template("atis_flight",
                    "show me {airline} flights from {from_city} to {to_city} with a stopover in {stop_city}"),
      make_template("atis_flight", "flights from {from_city} to {to_city} arriving in the {arr_pod}"),
      make_template("atis_flight",
                    "i would like a round trip flight from {from_city} to {to_city} departing at {dep_time}"),
      make_template("atis_flight", "list flights between {from_city} and {to_city} on {airline}"),
      make_template("atis_airfare", "what is the cheapest fare from {from_city} to {to_city}"),
      make_template("atis_airfare", "show me {class} fares from {from_city} to {to_city}"),
      make_template("atis_airfare", "how much is a {class} ticket from {from_city} to {to_city}"),
      make_template("atis_flight_time",
                    "what time do flights leave {from_city} for {to_city} in the {dep_pod}"),
      make_template("atis_flight_time",
                    "when does the {airline} flight from {from_city} to {to_city} arrive"),
      make_template("atis_ground_service", "what ground transportation is available in {ground_city}"),
      make_template("atis_ground_service", "show me ground transportation options in {ground_city}"),
      make_template("atis_aircraft", "what aircraft is used on the flight from {from_city} to {to_city}"),
  };
  return templates;
}

inline const std::string& slot_label_for(const std::string& key) {
  static const std::map<std::string, std::string> labels = {
      {"from_city", "fromloc.city_name"},
      {"to_city", "toloc.city_name"},
      {"stop_city", "stoploc.city_name"},
      {"ground_city", "city_name"},
      {"dep_time", "depart_time.time"},
      {"arr_time", "arrive_time.time"},
      {"dep_pod", "depart_time.period_of_day"},
      {"arr_pod", "arrive_time.period_of_day"},
      {"airline", "airline_name"},
      {"day", "depart_date.day_name"},
      {"class", "class_type"},
      {"cheapest", "cost_relative"},
  };
  return labels.at(key);
}

inline std::vector<std::string> city_tokens(const City& c) {
  return split(city_base(c.name), ' ');
}

inline std::vector<std::string> draw_time_tokens(Rng& rng) {
  switch (rng.below(3)) {
    case 0: {  // "8 pm"
      const int h = 1 + static_cast<int>(rng.below(12));
      return {std::to_string(h), rng.below(2) ? "pm" : "am"};
    }
    case 1: {  // "838 am"
      const int h = 1 + static_cast<int>(rng.below(12));
      const int m = 1 + static_cast<int>(rng.below(59));
      return {std::to_string(h * 100 + m), rng.below(2) ? "pm" : "am"};
    }
    default: {  // "1110" (24h)
      const int h = 10 + static_cast<int>(rng.below(14));
      const int m = static_cast<int>(rng.below(60));
      char buf[8];
      std::snprintf(buf, sizeof(buf), "%02d%02d", h, m);
      return {buf};
    }
  }
}

inline std::vector<std::string> draw_filler(const std::string& key,
                                            const Gazetteer& gaz, Rng& rng,
                                            const std::string& taken_city) {
  static const std::vector<std::string> airlines = {
      "american airlines", "united",    "delta", "continental",
      "northwest",         "us air",    "twa",   "lufthansa"};
  static const std::vector<std::string> days = {
      "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
  static const std::vector<std::string> classes = {"first class", "coach",
                                                   "business class", "economy"};
  static const std::vector<std::string> pods = {"morning", "afternoon", "evening",
                                                "night"};
  if (key == "from_city" || key == "to_city" || key == "stop_city" ||
      key == "ground_city") {
    const auto& cities = gaz.cities();
    const City* c = &cities[rng.below(cities.size())];
    while (city_base(c->name) == taken_city) c = &cities[rng.below(cities.size())];
    return city_tokens(*c);
  }
  if (key == "dep_time" || key == "arr_time") return draw_time_tokens(rng);
  if (key == "dep_pod" || key == "arr_pod") return {pods[rng.below(pods.size())]};
  if (key == "airline") return split(airlines[rng.below(airlines.size())], ' ');
  if (key == "day") return {days[rng.below(days.size())]};
  if (key == "class") return split(classes[rng.below(classes.size())], ' ');
  throw ArgumentError("unknown template slot " + key);
}

inline Utterance realize_template(const UtteranceTemplate& tpl,
                                  const Gazetteer& gaz, Rng& rng) {
  Utterance u;
  u.intent = tpl.intent;
  std::string from_city_base;
  for (const auto& piece : tpl.pieces) {
    if (!piece.is_slot) {
      // "round trip" and "cheapest" are literal text but tagged slots
      if (piece.text == "round" ) {
        u.tokens.push_back("round");
        u.slot_tags.push_back("B-round_trip");
        continue;
      }
      if (piece.text == "trip" && !u.slot_tags.empty() &&
          u.slot_tags.back() == "B-round_trip") {
        u.tokens.push_back("trip");
        u.slot_tags.push_back("I-round_trip");
        continue;
      }
      if (piece.text == "cheapest") {
        u.tokens.push_back("cheapest");
        u.slot_tags.push_back("B-cost_relative");
        continue;
      }
      u.tokens.push_back(piece.text);
      u.slot_tags.push_back("O");
      continue;
    }
    const std::string& label = slot_label_for(piece.text);
    const auto filler = draw_filler(piece.text, gaz, rng, from_city_base);
    if (piece.text == "from_city") from_city_base = join(filler, ' ');
    for (std::size_t i = 0; i < filler.size(); ++i) {
      u.tokens.push_back(filler[i]);
      u.slot_tags.push_back((i == 0 ? "B-" : "I-") + label);
    }
  }
  return u;
}

}  // namespace detail

// n template-drawn flight-domain utterances with gold IOB tags; deterministic
// per seed. User info is not attached here, see synthesize_user_info.
inline std::vector<Utterance> generate_synthetic_corpus(std::size_t n,
                                                        std::uint64_t seed,
                                                        const Gazetteer& gaz) {
  if (n < 1) throw ArgumentError("generate_synthetic_corpus: n must be >= 1");
  if (gaz.cities().empty())
    throw ArgumentError("generate_synthetic_corpus: empty gazetteer");
  Rng rng(seed);
  const auto& templates = detail::corpus_templates();
  std::vector<Utterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(detail::realize_template(templates[rng.below(templates.size())],
                                           gaz, rng));
  return out;
}

// Train plus a held-out set whose exact token sequences never appear in
// train (same templates, disjoint draws).
inline std::pair<std::vector<Utterance>, std::vector<Utterance>>
generate_corpus_split(std::size_t n_train, std::size_t n_test,
                      std::uint64_t seed, const Gazetteer& gaz) {
  Rng rng(seed);
  const auto& templates = detail::corpus_templates();
  std::set<std::string> train_keys;
  std::vector<Utterance> train, test;
  while (train.size() < n_train) {
    Utterance u = detail::realize_template(templates[rng.below(templates.size())],
                                           gaz, rng);
    train_keys.insert(detail::join(u.tokens, ' '));
    train.push_back(std::move(u));
  }
  std::size_t attempts = 0;
  std::set<std::string> test_keys;
  while (test.size() < n_test) {
    if (++attempts > 200 * n_test)
      throw ArgumentError("generate_corpus_split: cannot draw a disjoint test set");
    Utterance u = detail::realize_template(templates[rng.below(templates.size())],
                                           gaz, rng);
    const std::string key = detail::join(u.tokens, ' ');
    if (train_keys.count(key) || test_keys.count(key)) continue;
    test_keys.insert(key);
    test.push_back(std::move(u));
  }
  return {std::move(train), std::move(test)};
}

inline void apply_info_tags(std::vector<Utterance>& data,
                            const UserInfoDictionary& dict) {
  for (auto& u : data) u.info_tags = derive_info_sequence(u, dict);
}

// ---------------------------------------------------------------------------
// user-info synthesis (the offline stand-in for location/context services)

// The user is assumed near the departure city: picks one of the cities
// within 50 km of the fromloc span, uniformly at random. Nothing is emitted
// (and a note is logged) when the span is missing, unknown, or isolated.
inline std::optional<UserInfoEntry> synthesize_location(
    const Utterance& u, const Gazetteer& gaz, Rng& rng,
    std::vector<std::string>* log = nullptr) {
  auto span = find_slot_span(u, "fromloc");
  if (!span) return std::nullopt;
  const std::string text =
      detail::join(span_tokens(u, span->first, span->second), ' ');
  const City* from = gaz.find(text);
  if (!from) {
    if (log) log->push_back("skip location: \"" + text + "\" not in gazetteer");
    return std::nullopt;
  }
  const auto near = gaz.nearby(*from);
  if (near.empty()) {
    if (log) log->push_back("skip location: no city within 50 km of " + from->name);
    return std::nullopt;
  }
  return UserInfoEntry{"loc", near[rng.below(near.size())].name};
}

// One depart and one arrive period preference, when the utterance carries a
// parseable *_time.time slot or a *_time.period_of_day slot for that side.
inline std::vector<UserInfoEntry> synthesize_time_periods(const Utterance& u) {
  std::vector<UserInfoEntry> out;
  for (const std::string side : {"depart", "arrive"}) {
    std::optional<std::string> period;
    for (std::size_t i = 0; i < u.slot_tags.size() && !period; ++i) {
      if (!iob_is_begin(u.slot_tags[i])) continue;
      const std::string stem = iob_stem(u.slot_tags[i]);
      std::size_t end = i + 1;
      while (end < u.slot_tags.size() && iob_is_inside(u.slot_tags[end])) ++end;
      if (stem == side + "_time.time") {
        if (auto minutes = parse_time_token(span_tokens(u, i, end)))
          period = period_of_minute(*minutes).name;
      } else if (stem == side + "_time.period_of_day") {
        if (const TimePeriod* p =
                find_period(detail::join(span_tokens(u, i, end), ' ')))
          period = p->name;
      }
    }
    if (period) out.push_back({side + "_period", *period});
  }
  return out;
}

// Rewrites user info for a whole corpus; deterministic per seed.
inline void synthesize_user_info(std::vector<Utterance>& data,
                                 const Gazetteer& gaz, std::uint64_t seed,
                                 std::vector<std::string>* log = nullptr) {
  Rng rng(seed);
  for (auto& u : data) {
    u.user_info.clear();
    if (auto loc = synthesize_location(u, gaz, rng, log))
      u.user_info.push_back(*loc);
    for (auto& e : synthesize_time_periods(u)) u.user_info.push_back(std::move(e));
  }
}

}  // namespace progslu
