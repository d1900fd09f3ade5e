#pragma once

// key = value run configuration ('#' comment lines, UTF-8). Unknown keys are
// rejected; every key has a documented default; the effective configuration
// can be echoed back out canonically.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "progslu/checkpoint.hpp"
#include "progslu/errors.hpp"
#include "progslu/model.hpp"
#include "progslu/training.hpp"

namespace progslu {

class KeyValues {
 public:
  static KeyValues parse(std::istream& in, const std::string& origin) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string trimmed = detail::trim(line);
      if (trimmed.empty() || trimmed[0] == '#') continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ParseError(origin + ": line " + std::to_string(lineno) +
                         ": expected 'key = value'");
      const std::string key = detail::trim(trimmed.substr(0, eq));
      const std::string value = detail::trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw ParseError(origin + ": line " + std::to_string(lineno) + ": empty key");
      if (kv.values_.count(key))
        throw ParseError(origin + ": line " + std::to_string(lineno) +
                         ": duplicate key " + key);
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    return parse(in, path);
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    const std::string s = get(key, std::to_string(fallback));
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError("config: key " + key + ": not a count: \"" + s + "\"");
    }
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    return get_size(key, fallback);
  }

  double get_double(const std::string& key, double fallback) const {
    const std::string s = get(key, detail::fmt_double(fallback));
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ConfigError("config: key " + key + ": not a number: \"" + s + "\"");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const std::string s = get(key, fallback ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config: key " + key + ": not a boolean: \"" + s + "\"");
  }

  // Every key must have been consumed by a get(); anything else is a typo.
  void reject_unknown(const std::string& origin) const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key))
        throw ConfigError(origin + ": unknown key \"" + key + "\"");
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// Model + training + path settings for one run.
struct RunConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t dim_d = 0;  // 0: one feature per IOB info tag
  DecoderVariant decoder = DecoderVariant::Feedforward;
  IntentSource intent_source = IntentSource::EncoderFinal;
  BaselineMode baseline = BaselineMode::None;
  TrainConfig train;
  std::string dictionary;
  std::string gazetteer;
  std::string eval_data;

  static RunConfig from_kv(const KeyValues& kv) {
    RunConfig c;
    c.embed_dim = kv.get_size("embed_dim", c.embed_dim);
    c.hidden_dim = kv.get_size("hidden_dim", c.hidden_dim);
    c.dim_d = kv.get_size("dim_d", c.dim_d);
    c.decoder = detail::parse_decoder(kv.get("decoder", "feedforward"));
    c.intent_source =
        detail::parse_intent_source(kv.get("intent_source", "encoder_final"));
    c.baseline = detail::parse_baseline(kv.get("baseline", "none"));
    c.train.phase1_epochs = kv.get_size("phase1_epochs", c.train.phase1_epochs);
    c.train.phase2_epochs = kv.get_size("phase2_epochs", c.train.phase2_epochs);
    c.train.learning_rate = kv.get_double("learning_rate", c.train.learning_rate);
    c.train.adam_beta1 = kv.get_double("adam_beta1", c.train.adam_beta1);
    c.train.adam_beta2 = kv.get_double("adam_beta2", c.train.adam_beta2);
    c.train.adam_eps = kv.get_double("adam_eps", c.train.adam_eps);
    c.train.clip_norm = kv.get_double("clip_norm", c.train.clip_norm);
    c.train.seed = kv.get_u64("seed", c.train.seed);
    const std::string ds = kv.get("delta_source", "gold");
    if (ds == "gold") {
      c.train.delta_source = DeltaSource::Gold;
    } else if (ds == "predicted") {
      c.train.delta_source = DeltaSource::Predicted;
    } else {
      throw ConfigError("config: delta_source must be gold or predicted");
    }
    c.train.shuffle = kv.get_bool("shuffle", c.train.shuffle);
    c.train.draft_loss_norm = kv.get_bool("draft_loss_norm", c.train.draft_loss_norm);
    c.train.eval_each_epoch = kv.get_bool("eval_each_epoch", c.train.eval_each_epoch);
    c.dictionary = kv.get("dictionary", "");
    c.gazetteer = kv.get("gazetteer", "");
    c.eval_data = kv.get("eval_data", "");
    c.train.validate();
    return c;
  }

  static RunConfig load(const std::string& path) {
    const KeyValues kv = KeyValues::load(path);
    RunConfig c = from_kv(kv);
    kv.reject_unknown(path);
    return c;
  }

  ModelConfig to_model_config(const Vocab& vocab,
                              const UserInfoDictionary& dict) const {
    ModelConfig m;
    m.vocab_size = vocab.num_tokens();
    m.embed_dim = embed_dim;
    m.hidden_dim = hidden_dim;
    m.num_info_tags = vocab.num_info_tags_iob();
    m.num_slot_tags = vocab.num_slot_tags_iob();
    m.num_intents = vocab.num_intents();
    m.num_info_types = dict.num_types();
    m.dim_d = dim_d;
    m.decoder = decoder;
    m.intent_source = intent_source;
    m.baseline = baseline;
    m.seed = train.seed;
    return m;
  }

  // Canonical echo of the effective configuration, defaults included.
  std::string echo() const {
    std::ostringstream os;
    os << "embed_dim = " << embed_dim << "\n";
    os << "hidden_dim = " << hidden_dim << "\n";
    os << "dim_d = " << dim_d << "\n";
    os << "decoder = " << detail::decoder_name(decoder) << "\n";
    os << "intent_source = " << detail::intent_source_name(intent_source) << "\n";
    os << "baseline = " << detail::baseline_name(baseline) << "\n";
    os << "phase1_epochs = " << train.phase1_epochs << "\n";
    os << "phase2_epochs = " << train.phase2_epochs << "\n";
    os << "learning_rate = " << detail::fmt_double(train.learning_rate) << "\n";
    os << "adam_beta1 = " << detail::fmt_double(train.adam_beta1) << "\n";
    os << "adam_beta2 = " << detail::fmt_double(train.adam_beta2) << "\n";
    os << "adam_eps = " << detail::fmt_double(train.adam_eps) << "\n";
    os << "clip_norm = " << detail::fmt_double(train.clip_norm) << "\n";
    os << "seed = " << train.seed << "\n";
    os << "delta_source = "
       << (train.delta_source == DeltaSource::Gold ? "gold" : "predicted") << "\n";
    os << "shuffle = " << (train.shuffle ? "true" : "false") << "\n";
    os << "draft_loss_norm = " << (train.draft_loss_norm ? "true" : "false") << "\n";
    os << "eval_each_epoch = " << (train.eval_each_epoch ? "true" : "false") << "\n";
    os << "dictionary = " << dictionary << "\n";
    os << "gazetteer = " << gazetteer << "\n";
    os << "eval_data = " << eval_data << "\n";
    return os.str();
  }
};

}  // namespace progslu
