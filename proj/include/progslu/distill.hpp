#pragma once

// Prior-knowledge distillation: IOB span merging, raw/normalized distances
// between tagged spans and the user's info, and the trainable distance
// features fed to the slot filling layer.

#include <optional>
#include <string>
#include <vector>

#include "progslu/autodiff.hpp"
#include "progslu/corpus.hpp"
#include "progslu/gazetteer.hpp"

namespace progslu {

struct Span {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;  // half-open

  bool operator==(const Span&) const = default;
};

// Maximal B-X (I-X)* runs; O positions are excluded.
inline std::vector<Span> merge_spans(const std::vector<std::string>& iob_tags) {
  validate_iob(iob_tags, "merge_spans");
  std::vector<Span> out;
  for (std::size_t i = 0; i < iob_tags.size(); ++i) {
    if (!iob_is_begin(iob_tags[i])) continue;
    const std::string type = iob_stem(iob_tags[i]);
    std::size_t end = i + 1;
    while (end < iob_tags.size() && iob_is_inside(iob_tags[end])) ++end;
    out.push_back({type, i, end});
    i = end - 1;
  }
  return out;
}

// Inverse of merge_spans over well-formed input.
inline std::vector<std::string> expand_spans(const std::vector<Span>& spans,
                                             std::size_t length) {
  std::vector<std::string> out(length, "O");
  for (const auto& s : spans) {
    out.at(s.start) = "B-" + s.type;
    for (std::size_t i = s.start + 1; i < s.end; ++i) out.at(i) = "I-" + s.type;
  }
  return out;
}

// Raw kilometers / minutes saturate the sigmoid; training uses these scales.
inline constexpr double kGeoDeltaScaleKm = 100.0;
inline constexpr double kTimeDeltaScaleMin = 360.0;
inline constexpr double kDeltaMismatch = -1.0;

// Per (token, base info type) distances. -1 marks a type mismatch or an
// unresolvable span; every token of one merged span shares its span's value.
struct PriorDistanceTable {
  std::size_t num_tokens = 0;
  std::size_t num_types = 0;
  std::vector<double> raw;         // km or minutes, -1 sentinel
  std::vector<double> normalized;  // raw scaled into sigmoid range, -1 sentinel

  PriorDistanceTable() = default;
  PriorDistanceTable(std::size_t tokens, std::size_t types)
      : num_tokens(tokens),
        num_types(types),
        raw(tokens * types, kDeltaMismatch),
        normalized(tokens * types, kDeltaMismatch) {}

  double raw_at(std::size_t t, std::size_t j) const { return raw[t * num_types + j]; }
  double at(std::size_t t, std::size_t j) const { return normalized[t * num_types + j]; }

  void set(std::size_t t, std::size_t j, double raw_value, double norm_value) {
    raw[t * num_types + j] = raw_value;
    normalized[t * num_types + j] = norm_value;
  }

  std::string to_tsv(const std::vector<std::string>& tokens,
                     const std::vector<std::string>& type_names) const {
    std::ostringstream os;
    os << "token\ttype\traw\tnormalized\n";
    for (std::size_t t = 0; t < num_tokens; ++t)
      for (std::size_t j = 0; j < num_types; ++j)
        os << tokens[t] << '\t' << type_names[j] << '\t' << raw_at(t, j) << '\t'
           << at(t, j) << '\n';
    return os.str();
  }
};

namespace detail {

// Minute-of-day for a time-typed span: a clock value when it parses,
// otherwise the middle of a named period ("morning" as a span value).
inline std::optional<int> span_time_stamp(const std::vector<std::string>& tokens) {
  if (auto minutes = parse_time_token(tokens)) return minutes;
  if (const TimePeriod* p = find_period(join(tokens, ' ')))
    return period_middle(*p);
  return std::nullopt;
}

}  // namespace detail

// Fills the table for the given info spans against the utterance's user
// info. Geo spans measure haversine km to the user location; time spans
// measure circular minutes to the middle of the preferred period. Anything
// unresolvable keeps the -1 sentinel (and leaves a note in log).
inline PriorDistanceTable compute_delta(const Utterance& u,
                                        const std::vector<Span>& spans,
                                        const std::vector<UserInfoEntry>& user_info,
                                        const UserInfoDictionary& dict,
                                        const Gazetteer& gaz,
                                        std::vector<std::string>* log = nullptr) {
  PriorDistanceTable table(u.tokens.size(), dict.num_types());
  auto note = [&](const std::string& msg) {
    if (log) log->push_back(msg);
  };
  for (const auto& span : spans) {
    const int ti = dict.type_index(span.type);
    if (ti < 0) {
      note("span type " + span.type + " not in dictionary");
      continue;
    }
    // Entry order must not matter: with several entries of one type the
    // lexicographically smallest content wins.
    const UserInfoEntry* entry = nullptr;
    for (const auto& e : user_info) {
      if (e.info_type != span.type) continue;
      if (!entry || e.content < entry->content) entry = &e;
    }
    if (!entry) continue;

    const auto tokens = span_tokens(u, span.start, span.end);
    double raw = kDeltaMismatch, norm = kDeltaMismatch;
    if (dict.type(span.type).kind == DistanceKind::Geo) {
      const City* span_city = gaz.find(detail::join(tokens, ' '));
      const City* user_city = gaz.find(entry->content);
      if (!span_city || !user_city) {
        note("unresolvable geo span \"" + detail::join(tokens, ' ') + "\" vs \"" +
             entry->content + "\"");
        continue;
      }
      raw = geo_distance(*span_city, *user_city);
      norm = raw / kGeoDeltaScaleKm;
    } else {
      const auto stamp = detail::span_time_stamp(tokens);
      const TimePeriod* period = find_period(entry->content);
      if (!stamp || !period) {
        note("unresolvable time span \"" + detail::join(tokens, ' ') + "\" vs \"" +
             entry->content + "\"");
        continue;
      }
      raw = circular_minutes(*stamp, period_middle(*period));
      norm = raw / kTimeDeltaScaleMin;
    }
    for (std::size_t t = span.start; t < span.end; ++t)
      table.set(t, static_cast<std::size_t>(ti), raw, norm);
  }
  return table;
}

// d_t(j) = sigmoid(beta[j] * delta_t(j)), the scalar delta broadcast over
// beta's row. The -1 sentinel rides through the same formula, which is what
// pushes mismatched types toward zero.
inline std::vector<ad::Tensor> distance_features(ad::Tape& tape,
                                                 const ad::Tensor& beta,
                                                 const PriorDistanceTable& table,
                                                 std::size_t t) {
  if (beta.rank() != 2 || beta.dim(0) != table.num_types)
    throw DimensionError("distance_features: beta " + ad::shape_str(beta.shape()) +
                         " does not cover " + std::to_string(table.num_types) +
                         " info types");
  std::vector<ad::Tensor> out;
  out.reserve(table.num_types);
  for (std::size_t j = 0; j < table.num_types; ++j)
    out.push_back(
        ad::sigmoid(tape, ad::scalar_mul(tape, table.at(t, j), ad::row(tape, beta, j))));
  return out;
}

inline constexpr double kBetaInit = 2.0;  // maps the -1 sentinel near zero

inline ad::Tensor make_beta(std::size_t num_types, std::size_t dim_d) {
  return ad::Tensor::full({num_types, dim_d}, kBetaInit, true);
}

}  // namespace progslu
