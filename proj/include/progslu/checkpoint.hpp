#pragma once

// Binary checkpoints: magic, format version, a config section (model config
// plus the vocabularies, dictionary, and gazetteer, so a checkpoint is
// self-contained), then every named parameter as (name, shape, little-endian
// f64 data). Round-trips are byte-exact.

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "progslu/corpus.hpp"
#include "progslu/gazetteer.hpp"
#include "progslu/model.hpp"

namespace progslu {

inline constexpr char kCheckpointMagic[8] = {'P', 'S', 'L', 'U',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw FormatError("checkpoint: truncated file");
  return v;
}
inline std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw FormatError("checkpoint: truncated file");
  return v;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Joined with the unit separator; tokens never contain control characters.
inline std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back('\x1f');
    out += items[i];
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  if (s.empty()) return {};
  return split(s, '\x1f');
}

}  // namespace detail

struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  UserInfoDictionary dict;
  Gazetteer gazetteer;
  ProgModel model;
};

inline std::string checkpoint_config_blob(const ModelConfig& cfg, const Vocab& vocab,
                                          const UserInfoDictionary& dict,
                                          const Gazetteer& gaz) {
  std::ostringstream os;
  auto line = [&](const std::string& k, const std::string& v) {
    os << k << '\t' << v << '\n';
  };
  line("embed_dim", std::to_string(cfg.embed_dim));
  line("hidden_dim", std::to_string(cfg.hidden_dim));
  line("dim_d", std::to_string(cfg.dim_d));
  line("decoder", detail::decoder_name(cfg.decoder));
  line("intent_source", detail::intent_source_name(cfg.intent_source));
  line("baseline", detail::baseline_name(cfg.baseline));
  line("seed", std::to_string(cfg.seed));
  line("tokens", detail::join_list(vocab.token_list()));
  line("slot_tags", detail::join_list(vocab.slot_tag_list()));
  line("info_tags", detail::join_list(vocab.info_tag_list()));
  line("intents", detail::join_list(vocab.intent_list()));
  {
    std::vector<std::string> types;
    for (const auto& name : dict.type_names()) {
      const UserInfoType& t = dict.type(name);
      types.push_back(name + '\x1e' +
                      (t.kind == DistanceKind::Geo ? "geo" : "time") + '\x1e' +
                      detail::join(t.slot_stems, ','));
    }
    line("dictionary", detail::join_list(types));
  }
  {
    std::vector<std::string> cities;
    for (const auto& c : gaz.cities())
      cities.push_back(c.name + '\x1e' + detail::fmt_double(c.latitude) + '\x1e' +
                       detail::fmt_double(c.longitude));
    line("gazetteer", detail::join_list(cities));
  }
  return os.str();
}

inline void save_checkpoint(const ProgModel& model, const Vocab& vocab,
                            const UserInfoDictionary& dict, const Gazetteer& gaz,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  const std::string blob =
      checkpoint_config_blob(model.config(), vocab, dict, gaz);
  detail::put_u64(out, blob.size());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  const auto& params = model.parameters();
  detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d = 0; d < p.tensor.rank(); ++d)
      detail::put_u64(out, p.tensor.dim(d));
    const auto& v = p.tensor.value();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw FormatError("checkpoint: bad magic string in " + path);
  const std::uint32_t version = detail::get_u32(in);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported format version " +
                      std::to_string(version));
  const std::uint64_t blob_len = detail::get_u64(in);
  std::string blob(blob_len, '\0');
  if (!in.read(blob.data(), static_cast<std::streamsize>(blob_len)))
    throw FormatError("checkpoint: truncated config section");

  std::map<std::string, std::string> kv;
  for (const auto& line : detail::split(blob, '\n')) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("checkpoint: malformed config line");
    kv[line.substr(0, tab)] = line.substr(tab + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("checkpoint: missing config key " + k);
    return it->second;
  };

  Vocab vocab = Vocab::from_lists(
      detail::split_list(need("tokens")), detail::split_list(need("slot_tags")),
      detail::split_list(need("info_tags")), detail::split_list(need("intents")));

  std::vector<std::pair<std::string, UserInfoType>> dict_entries;
  for (const auto& item : detail::split_list(need("dictionary"))) {
    const auto fields = detail::split(item, '\x1e');
    if (fields.size() != 3) throw FormatError("checkpoint: malformed dictionary entry");
    UserInfoType t;
    t.kind = fields[1] == "geo" ? DistanceKind::Geo : DistanceKind::Time;
    for (const auto& stem : detail::split(fields[2], ','))
      if (!stem.empty()) t.slot_stems.push_back(stem);
    dict_entries.emplace_back(fields[0], std::move(t));
  }
  UserInfoDictionary dict = UserInfoDictionary::from_entries(dict_entries);

  std::vector<City> cities;
  for (const auto& item : detail::split_list(need("gazetteer"))) {
    const auto fields = detail::split(item, '\x1e');
    if (fields.size() != 3) throw FormatError("checkpoint: malformed gazetteer entry");
    cities.push_back(
        City{fields[0], std::stod(fields[1]), std::stod(fields[2])});
  }

  ModelConfig cfg;
  cfg.embed_dim = std::stoull(need("embed_dim"));
  cfg.hidden_dim = std::stoull(need("hidden_dim"));
  cfg.dim_d = std::stoull(need("dim_d"));
  cfg.decoder = detail::parse_decoder(need("decoder"));
  cfg.intent_source = detail::parse_intent_source(need("intent_source"));
  cfg.baseline = detail::parse_baseline(need("baseline"));
  cfg.seed = std::stoull(need("seed"));
  cfg.vocab_size = vocab.num_tokens();
  cfg.num_slot_tags = vocab.num_slot_tags_iob();
  cfg.num_intents = vocab.num_intents();
  cfg.num_info_tags = vocab.num_info_tags_iob();
  cfg.num_info_types = dict.num_types();

  Checkpoint ckpt{cfg, std::move(vocab), std::move(dict),
                  Gazetteer::from_cities(std::move(cities)), ProgModel(cfg)};

  const std::uint32_t nparams = detail::get_u32(in);
  const auto& params = ckpt.model.parameters();
  if (nparams != params.size())
    throw FormatError("checkpoint: has " + std::to_string(nparams) +
                      " parameters, model defines " + std::to_string(params.size()));
  for (const auto& p : params) {
    const std::uint32_t name_len = detail::get_u32(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw FormatError("checkpoint: truncated parameter name");
    if (name != p.name)
      throw FormatError("checkpoint: parameter " + name + ", expected " + p.name);
    const std::uint32_t ndim = detail::get_u32(in);
    ad::Shape shape(ndim);
    for (auto& d : shape) d = detail::get_u64(in);
    if (shape != p.tensor.shape())
      throw FormatError("checkpoint: shape mismatch for " + name + ": file has " +
                        ad::shape_str(shape) + ", config derives " +
                        ad::shape_str(p.tensor.shape()));
    auto& v = p.tensor.value();
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
      throw FormatError("checkpoint: truncated data for " + name);
  }
  return ckpt;
}

}  // namespace progslu
