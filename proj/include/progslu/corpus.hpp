#pragma once

// Data model and file I/O: utterances with IOB slot tags, intents, attached
// user info, the user-info dictionary, and the vocabularies.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "progslu/errors.hpp"
#include "progslu/gazetteer.hpp"
#include "progslu/rng.hpp"

namespace progslu {

struct UserInfoEntry {
  std::string info_type;
  std::string content;

  bool operator==(const UserInfoEntry&) const = default;
};

enum class DistanceKind { Geo, Time };

struct UserInfoType {
  DistanceKind kind = DistanceKind::Geo;
  std::vector<std::string> slot_stems;
};

// Maps each user-info type to the slot-label stems it owns and the distance
// it supports. Stem matching is by prefix: the stem "fromloc" claims
// "fromloc.city_name", "fromloc.airport_name", and so on.
class UserInfoDictionary {
 public:
  static UserInfoDictionary from_entries(
      const std::vector<std::pair<std::string, UserInfoType>>& entries) {
    UserInfoDictionary d;
    std::set<std::string> seen_stems;
    for (const auto& [name, type] : entries) {
      if (d.entries_.count(name))
        throw ValidationError("dictionary: duplicate info type " + name);
      for (const auto& stem : type.slot_stems) {
        if (!seen_stems.insert(stem).second)
          throw ValidationError("dictionary: slot stem \"" + stem +
                                "\" assigned to more than one info type");
      }
      d.names_.push_back(name);
      d.entries_[name] = type;
    }
    return d;
  }

  // One type per line: info_type<TAB>geo|time<TAB>stem1,stem2,...
  static UserInfoDictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("dictionary: cannot open " + path);
    std::vector<std::pair<std::string, UserInfoType>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      auto fields = detail::split(line, '\t');
      if (fields.size() != 3)
        throw ParseError("dictionary: line " + std::to_string(lineno) +
                         ": expected info_type<TAB>geo|time<TAB>stems");
      UserInfoType t;
      if (fields[1] == "geo") {
        t.kind = DistanceKind::Geo;
      } else if (fields[1] == "time") {
        t.kind = DistanceKind::Time;
      } else {
        throw ParseError("dictionary: line " + std::to_string(lineno) +
                         ": distance kind must be geo or time, got \"" +
                         fields[1] + "\"");
      }
      for (const auto& stem : detail::split(fields[2], ',')) {
        const std::string s = detail::trim(stem);
        if (!s.empty()) t.slot_stems.push_back(s);
      }
      entries.emplace_back(detail::trim(fields[0]), std::move(t));
    }
    return from_entries(entries);
  }

  const std::vector<std::string>& type_names() const { return names_; }
  std::size_t num_types() const { return names_.size(); }

  bool has_type(const std::string& name) const { return entries_.count(name) > 0; }

  const UserInfoType& type(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
      throw LookupError("dictionary: unknown info type " + name);
    return it->second;
  }

  int type_index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    return -1;
  }

  // Which info type owns this slot-label stem, or -1 when none does.
  int type_of_slot_stem(const std::string& stem) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (const auto& prefix : entries_.at(names_[i]).slot_stems)
        if (stem.rfind(prefix, 0) == 0) return static_cast<int>(i);
    return -1;
  }

 private:
  std::vector<std::string> names_;  // file order; defines type indices
  std::map<std::string, UserInfoType> entries_;
};

struct Utterance {
  std::vector<std::string> tokens;
  std::vector<std::string> slot_tags;
  std::string intent;
  std::vector<UserInfoEntry> user_info;
  std::vector<std::string> info_tags;  // derived; empty until derived

  bool operator==(const Utterance&) const = default;
};

// ---------------------------------------------------------------------------
// IOB helpers

inline bool iob_is_begin(const std::string& tag) { return tag.rfind("B-", 0) == 0; }
inline bool iob_is_inside(const std::string& tag) { return tag.rfind("I-", 0) == 0; }

inline std::string iob_stem(const std::string& tag) {
  return (iob_is_begin(tag) || iob_is_inside(tag)) ? tag.substr(2) : std::string();
}

// Position of the first I-X not preceded by B-X or I-X of the same X, or
// npos when the sequence is well-formed.
inline std::size_t iob_violation(const std::vector<std::string>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!iob_is_inside(tags[i])) continue;
    if (i == 0) return 0;
    const std::string& prev = tags[i - 1];
    if (!(iob_is_begin(prev) || iob_is_inside(prev)) ||
        iob_stem(prev) != iob_stem(tags[i]))
      return i;
  }
  return std::string::npos;
}

inline void validate_iob(const std::vector<std::string>& tags,
                         const std::string& context) {
  const std::size_t pos = iob_violation(tags);
  if (pos != std::string::npos)
    throw ValidationError(context + ", position " + std::to_string(pos) +
                          ": tag " + tags[pos] + " opens no span");
}

// First slot span whose label stem contains `needle`, as [start, end).
inline std::optional<std::pair<std::size_t, std::size_t>> find_slot_span(
    const Utterance& u, const std::string& needle) {
  for (std::size_t i = 0; i < u.slot_tags.size(); ++i) {
    if (!iob_is_begin(u.slot_tags[i])) continue;
    const std::string stem = iob_stem(u.slot_tags[i]);
    if (stem.find(needle) == std::string::npos) continue;
    std::size_t end = i + 1;
    while (end < u.slot_tags.size() && iob_is_inside(u.slot_tags[end]) &&
           iob_stem(u.slot_tags[end]) == stem)
      ++end;
    return std::make_pair(i, end);
  }
  return std::nullopt;
}

inline std::vector<std::string> span_tokens(const Utterance& u, std::size_t start,
                                            std::size_t end) {
  return {u.tokens.begin() + static_cast<std::ptrdiff_t>(start),
          u.tokens.begin() + static_cast<std::ptrdiff_t>(end)};
}

// Projects slot tags onto user-info tags: a slot span owned by info type t
// becomes B-t/I-t with the B/I prefix preserved; everything else is O.
inline std::vector<std::string> derive_info_sequence(
    const Utterance& u, const UserInfoDictionary& dict) {
  std::vector<std::string> out;
  out.reserve(u.slot_tags.size());
  for (const auto& tag : u.slot_tags) {
    const std::string stem = iob_stem(tag);
    if (stem.empty()) {
      out.push_back("O");
      continue;
    }
    const int ti = dict.type_of_slot_stem(stem);
    if (ti < 0) {
      out.push_back("O");
    } else {
      out.push_back(tag.substr(0, 2) + dict.type_names()[ti]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dataset file format
//
// Per utterance:
//   #intent<TAB>label
//   #userinfo<TAB>type<TAB>content        (zero or more)
//   token<TAB>slot_tag                    (one per token)
//   <blank line>

inline std::vector<Utterance> parse_dataset(std::istream& in,
                                            const UserInfoDictionary& dict) {
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<Utterance> current;
  auto err = [&](const std::string& msg) {
    return ParseError("dataset: line " + std::to_string(lineno) + ": " + msg);
  };
  auto finish = [&]() {
    Utterance& u = *current;
    if (u.tokens.empty())
      throw ValidationError("dataset: utterance " + std::to_string(out.size()) +
                            " has no tokens");
    validate_iob(u.slot_tags, "dataset: utterance " + std::to_string(out.size()));
    for (const auto& e : u.user_info)
      if (!dict.has_type(e.info_type))
        throw ValidationError("dataset: utterance " + std::to_string(out.size()) +
                              ": unknown user info type " + e.info_type);
    u.info_tags = derive_info_sequence(u, dict);
    out.push_back(std::move(u));
    current.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current) throw err("blank line outside an utterance");
      finish();
      continue;
    }
    auto fields = detail::split(line, '\t');
    if (!current) {
      if (fields.size() != 2 || fields[0] != "#intent")
        throw err("expected '#intent<TAB>label'");
      if (fields[1].empty()) throw err("empty intent label");
      current = Utterance{};
      current->intent = fields[1];
      continue;
    }
    if (fields[0] == "#userinfo") {
      if (!current->tokens.empty()) throw err("#userinfo after token lines");
      if (fields.size() != 3) throw err("expected '#userinfo<TAB>type<TAB>content'");
      current->user_info.push_back({fields[1], fields[2]});
      continue;
    }
    if (fields.size() != 2) throw err("expected 'token<TAB>slot_tag'");
    if (fields[0].empty() || fields[1].empty()) throw err("empty token or tag");
    current->tokens.push_back(fields[0]);
    current->slot_tags.push_back(fields[1]);
  }
  if (current) {
    ++lineno;
    throw err("utterance not terminated by a blank line");
  }
  return out;
}

inline std::vector<Utterance> load_dataset(const std::string& path,
                                           const UserInfoDictionary& dict) {
  std::ifstream in(path);
  if (!in) throw IoError("dataset: cannot open " + path);
  return parse_dataset(in, dict);
}

inline void write_dataset(std::ostream& out, const std::vector<Utterance>& data) {
  for (const auto& u : data) {
    out << "#intent\t" << u.intent << "\n";
    for (const auto& e : u.user_info)
      out << "#userinfo\t" << e.info_type << "\t" << e.content << "\n";
    for (std::size_t t = 0; t < u.tokens.size(); ++t)
      out << u.tokens[t] << "\t" << u.slot_tags[t] << "\n";
    out << "\n";
  }
}

inline void save_dataset(const std::string& path,
                         const std::vector<Utterance>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dataset: cannot write " + path);
  write_dataset(out, data);
}

// Uniform sample without replacement; the output order is the shuffle order.
inline std::vector<Utterance> sample_subset(const std::vector<Utterance>& data,
                                            std::size_t size, std::uint64_t seed) {
  if (size > data.size())
    throw ArgumentError("sample_subset: requested " + std::to_string(size) +
                        " of " + std::to_string(data.size()) + " records");
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<Utterance> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(data[idx[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// vocabularies

// Token / slot-tag / info-tag / intent id spaces. Token ids reserve 0 for
// padding and 1 for unknown words; tag vocabularies put O last so the IOB
// labels occupy a dense prefix.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab() = default;

  static Vocab build(const std::vector<Utterance>& data,
                     const UserInfoDictionary& dict) {
    std::set<std::string> tokens, slot_tags;
    std::set<std::string> intents;
    for (const auto& u : data) {
      tokens.insert(u.tokens.begin(), u.tokens.end());
      intents.insert(u.intent);
      for (const auto& tag : u.slot_tags)
        if (tag != "O") slot_tags.insert(tag);
    }
    Vocab v;
    v.tokens_ = {"<pad>", "<unk>"};
    v.tokens_.insert(v.tokens_.end(), tokens.begin(), tokens.end());
    v.slot_tags_.assign(slot_tags.begin(), slot_tags.end());
    v.slot_tags_.push_back("O");
    for (const auto& name : dict.type_names()) {
      v.info_tags_.push_back("B-" + name);
      v.info_tags_.push_back("I-" + name);
    }
    v.info_tags_.push_back("O");
    v.intents_.assign(intents.begin(), intents.end());
    v.index();
    return v;
  }

  static Vocab from_lists(std::vector<std::string> tokens,
                          std::vector<std::string> slot_tags,
                          std::vector<std::string> info_tags,
                          std::vector<std::string> intents) {
    Vocab v;
    v.tokens_ = std::move(tokens);
    v.slot_tags_ = std::move(slot_tags);
    v.info_tags_ = std::move(info_tags);
    v.intents_ = std::move(intents);
    v.index();
    return v;
  }

  int token_id(const std::string& tok) const {
    auto it = token_ids_.find(tok);
    return it == token_ids_.end() ? kUnk : it->second;
  }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t num_tokens() const { return tokens_.size(); }

  int slot_tag_id(const std::string& tag) const {
    auto it = slot_ids_.find(tag);
    if (it == slot_ids_.end()) throw LookupError("vocab: unknown slot tag " + tag);
    return it->second;
  }
  const std::string& slot_tag(std::size_t id) const { return slot_tags_.at(id); }
  std::size_t num_slot_tags_iob() const { return slot_tags_.size() - 1; }
  std::size_t slot_o_id() const { return slot_tags_.size() - 1; }

  int info_tag_id(const std::string& tag) const {
    auto it = info_ids_.find(tag);
    if (it == info_ids_.end()) throw LookupError("vocab: unknown info tag " + tag);
    return it->second;
  }
  const std::string& info_tag(std::size_t id) const { return info_tags_.at(id); }
  std::size_t num_info_tags_iob() const { return info_tags_.size() - 1; }
  std::size_t info_o_id() const { return info_tags_.size() - 1; }
  // Base info type of an IOB info tag id; valid for id < num_info_tags_iob().
  std::size_t info_tag_base_type(std::size_t id) const { return id / 2; }

  int intent_id(const std::string& label) const {
    auto it = intent_ids_.find(label);
    if (it == intent_ids_.end()) throw LookupError("vocab: unknown intent " + label);
    return it->second;
  }
  const std::string& intent(std::size_t id) const { return intents_.at(id); }
  std::size_t num_intents() const { return intents_.size(); }

  std::vector<int> encode_tokens(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(token_id(t));
    return out;
  }

  const std::vector<std::string>& token_list() const { return tokens_; }
  const std::vector<std::string>& slot_tag_list() const { return slot_tags_; }
  const std::vector<std::string>& info_tag_list() const { return info_tags_; }
  const std::vector<std::string>& intent_list() const { return intents_; }

 private:
  void index() {
    for (std::size_t i = 0; i < tokens_.size(); ++i) token_ids_[tokens_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < slot_tags_.size(); ++i) slot_ids_[slot_tags_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < info_tags_.size(); ++i) info_ids_[info_tags_[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < intents_.size(); ++i) intent_ids_[intents_[i]] = static_cast<int>(i);
  }

  std::vector<std::string> tokens_, slot_tags_, info_tags_, intents_;
  std::map<std::string, int> token_ids_, slot_ids_, info_ids_, intent_ids_;
};

}  // namespace progslu
