#pragma once

// The progressive attention BiRNN: utterance BiLSTM encoder, shared
// attention, user-info tagging head, slot filling head fed by distilled
// distance features, and an intent head. Also the plain attention baseline
// and its concat-user-info variant.

#include <map>
#include <string>
#include <vector>

#include "progslu/autodiff.hpp"
#include "progslu/distill.hpp"
#include "progslu/errors.hpp"

namespace progslu {

enum class DecoderVariant { Feedforward, Lstm };
enum class IntentSource { EncoderFinal, SlotStatesMean };
enum class BaselineMode { None, AttBirnn, AttBirnnConcatInfo };

namespace detail {

inline const char* decoder_name(DecoderVariant d) {
  return d == DecoderVariant::Feedforward ? "feedforward" : "lstm";
}
inline const char* intent_source_name(IntentSource s) {
  return s == IntentSource::EncoderFinal ? "encoder_final" : "slot_states_mean";
}
inline const char* baseline_name(BaselineMode b) {
  switch (b) {
    case BaselineMode::None: return "none";
    case BaselineMode::AttBirnn: return "att_birnn";
    case BaselineMode::AttBirnnConcatInfo: return "att_birnn_concat_info";
  }
  return "?";
}

inline DecoderVariant parse_decoder(const std::string& s) {
  if (s == "feedforward") return DecoderVariant::Feedforward;
  if (s == "lstm") return DecoderVariant::Lstm;
  throw FormatError("unknown decoder variant \"" + s + "\"");
}
inline IntentSource parse_intent_source(const std::string& s) {
  if (s == "encoder_final") return IntentSource::EncoderFinal;
  if (s == "slot_states_mean") return IntentSource::SlotStatesMean;
  throw FormatError("unknown intent source \"" + s + "\"");
}
inline BaselineMode parse_baseline(const std::string& s) {
  if (s == "none") return BaselineMode::None;
  if (s == "att_birnn") return BaselineMode::AttBirnn;
  if (s == "att_birnn_concat_info") return BaselineMode::AttBirnnConcatInfo;
  throw FormatError("unknown baseline mode \"" + s + "\"");
}

}  // namespace detail

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;     // per direction
  std::size_t num_info_tags = 0;   // |U|: IOB info tags, excluding O
  std::size_t num_slot_tags = 0;   // |S|: IOB slot tags, excluding O
  std::size_t num_intents = 0;
  std::size_t num_info_types = 0;  // base types = beta rows = delta columns
  std::size_t dim_d = 0;           // 0 resolves to num_info_tags
  DecoderVariant decoder = DecoderVariant::Feedforward;
  IntentSource intent_source = IntentSource::EncoderFinal;
  BaselineMode baseline = BaselineMode::None;
  std::uint64_t seed = 42;

  ModelConfig normalized() const {
    ModelConfig c = *this;
    if (c.dim_d == 0) c.dim_d = c.num_info_tags;
    return c;
  }

  void validate() const {
    auto positive = [](std::size_t v, const char* what) {
      if (v < 1) throw ConfigError(std::string("model config: ") + what + " must be >= 1");
    };
    positive(vocab_size, "vocab_size");
    positive(embed_dim, "embed_dim");
    positive(hidden_dim, "hidden_dim");
    positive(num_slot_tags, "num_slot_tags");
    positive(num_intents, "num_intents");
    if (baseline == BaselineMode::None) {
      positive(num_info_tags, "num_info_tags");
      positive(num_info_types, "num_info_types");
      positive(dim_d, "dim_d");
      if (num_info_tags != 2 * num_info_types)
        throw ConfigError("model config: num_info_tags must be 2 * num_info_types (IOB pairs)");
    } else if (decoder != DecoderVariant::Feedforward) {
      throw ConfigError("model config: baselines support only the feedforward decoder");
    }
  }

  std::size_t encoder_width() const { return 2 * hidden_dim; }
  std::size_t phi_width() const { return num_info_tags * dim_d + encoder_width(); }

  // Attention query: previous tagging state, whose shape depends on variant.
  std::size_t query_width() const {
    if (baseline != BaselineMode::None || decoder == DecoderVariant::Feedforward)
      return 2 * encoder_width();  // h ⊕ c
    return encoder_width();        // LSTM decoder state
  }

  std::size_t tagging_state_width() const {
    return decoder == DecoderVariant::Feedforward ? 2 * encoder_width()
                                                  : encoder_width();
  }

  std::size_t slot_state_width() const {
    if (baseline == BaselineMode::AttBirnn) return 2 * encoder_width();
    if (baseline == BaselineMode::AttBirnnConcatInfo)
      return 2 * encoder_width() + num_info_types;
    return decoder == DecoderVariant::Feedforward
               ? encoder_width() + phi_width()
               : encoder_width();
  }

  std::size_t intent_input_width() const {
    return intent_source == IntentSource::EncoderFinal ? encoder_width()
                                                       : slot_state_width();
  }
};

// Parameter groups: encoder+attention, tagging head, slot head, intent head,
// distance scaling. Every trainable tensor belongs to exactly one group.
enum class ParamGroup { Encoder, Tagging, Slot, Intent, DistanceScale };

inline const char* param_group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::Encoder: return "encoder";
    case ParamGroup::Tagging: return "tagging";
    case ParamGroup::Slot: return "slot";
    case ParamGroup::Intent: return "intent";
    case ParamGroup::DistanceScale: return "distance_scale";
  }
  return "?";
}

struct ModelParam {
  std::string name;
  ParamGroup group;
  ad::Tensor tensor;
};

inline std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;  // ties keep the lowest index
  return best;
}

class ProgModel {
 public:
  explicit ProgModel(const ModelConfig& config) : cfg_(config.normalized()) {
    cfg_.validate();
    Rng rng(cfg_.seed);
    const std::size_t H = cfg_.hidden_dim;
    const std::size_t E2 = cfg_.encoder_width();

    add_matrix("encoder.embedding", ParamGroup::Encoder, cfg_.vocab_size,
               cfg_.embed_dim, rng);
    add_lstm("encoder.fwd", ParamGroup::Encoder, cfg_.embed_dim, H, rng);
    add_lstm("encoder.bwd", ParamGroup::Encoder, cfg_.embed_dim, H, rng);
    add_matrix("attention.w_query", ParamGroup::Encoder, H, cfg_.query_width(), rng);
    add_matrix("attention.w_keys", ParamGroup::Encoder, H, E2, rng);
    add_bias("attention.b1", ParamGroup::Encoder, H);
    add_matrix("attention.w2", ParamGroup::Encoder, 1, H, rng);
    add_bias("attention.b2", ParamGroup::Encoder, 1);

    if (cfg_.baseline == BaselineMode::None) {
      if (cfg_.decoder == DecoderVariant::Lstm)
        add_lstm("tagging.cell", ParamGroup::Tagging, 2 * E2, E2, rng);
      add_matrix("tagging.w", ParamGroup::Tagging, cfg_.num_info_tags + 1,
                 cfg_.tagging_state_width(), rng);
      add_bias("tagging.bias", ParamGroup::Tagging, cfg_.num_info_tags + 1);
    }

    if (cfg_.decoder == DecoderVariant::Lstm)
      add_lstm("slot.cell", ParamGroup::Slot, E2 + cfg_.phi_width(), E2, rng);
    add_matrix("slot.w", ParamGroup::Slot, cfg_.num_slot_tags + 1,
               cfg_.slot_state_width(), rng);
    add_bias("slot.bias", ParamGroup::Slot, cfg_.num_slot_tags + 1);

    add_matrix("intent.w", ParamGroup::Intent, cfg_.num_intents,
               cfg_.intent_input_width(), rng);
    add_bias("intent.bias", ParamGroup::Intent, cfg_.num_intents);

    if (cfg_.baseline == BaselineMode::None) {
      params_.push_back({"beta", ParamGroup::DistanceScale,
                         make_beta(cfg_.num_info_types, cfg_.dim_d)});
      by_name_["beta"] = params_.size() - 1;
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ModelParam>& parameters() const { return params_; }

  const ad::Tensor& param(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw LookupError("model: no parameter " + name);
    return params_[it->second].tensor;
  }

  std::vector<ad::NamedParam> group_params(std::initializer_list<ParamGroup> groups) const {
    std::vector<ad::NamedParam> out;
    for (const auto& p : params_)
      for (ParamGroup g : groups)
        if (p.group == g) out.push_back({p.name, p.tensor});
    return out;
  }

  std::vector<ad::NamedParam> all_params() const {
    std::vector<ad::NamedParam> out;
    for (const auto& p : params_) out.push_back({p.name, p.tensor});
    return out;
  }

  // -------------------------------------------------------------------------
  // encoder

  struct Encoded {
    std::vector<ad::Tensor> h;  // h_t = fh_t ⊕ bh_t
    ad::Tensor h_final;         // h_T, the encoder state handed to decoders
  };

  Encoded encode(ad::Tape& tape, const std::vector<int>& token_ids) const {
    if (token_ids.empty()) throw DimensionError("encode: empty utterance");
    const std::size_t T = token_ids.size();
    const std::size_t H = cfg_.hidden_dim;
    const ad::Tensor& emb = param("encoder.embedding");

    std::vector<ad::Tensor> x(T);
    for (std::size_t t = 0; t < T; ++t)
      x[t] = ad::row(tape, emb, static_cast<std::size_t>(token_ids[t]));

    const ad::LstmParams fwd = lstm_params("encoder.fwd");
    const ad::LstmParams bwd = lstm_params("encoder.bwd");
    std::vector<ad::Tensor> fh(T), bh(T);
    ad::LstmState state{ad::Tensor::zeros({H}), ad::Tensor::zeros({H})};
    for (std::size_t t = 0; t < T; ++t) {
      state = ad::lstm_step(tape, x[t], state.h, state.c, fwd);
      fh[t] = state.h;
    }
    state = {ad::Tensor::zeros({H}), ad::Tensor::zeros({H})};
    for (std::size_t t = T; t-- > 0;) {
      state = ad::lstm_step(tape, x[t], state.h, state.c, bwd);
      bh[t] = state.h;
    }
    Encoded enc;
    enc.h.resize(T);
    for (std::size_t t = 0; t < T; ++t)
      enc.h[t] = ad::concat(tape, {fh[t], bh[t]});
    enc.h_final = enc.h[T - 1];
    return enc;
  }

  // -------------------------------------------------------------------------
  // attention

  struct AttentionOut {
    ad::Tensor context;  // c_t
    ad::Tensor weights;  // alpha_t, sums to 1
  };

  // Key projections are query-independent; computed once per utterance.
  std::vector<ad::Tensor> attention_keys(ad::Tape& tape,
                                         const std::vector<ad::Tensor>& h) const {
    const ad::Tensor& wk = param("attention.w_keys");
    std::vector<ad::Tensor> keys;
    keys.reserve(h.size());
    for (const auto& hk : h) keys.push_back(ad::matmul(tape, wk, hk));
    return keys;
  }

  AttentionOut attention_context(ad::Tape& tape,
                                 const std::vector<ad::Tensor>& keys,
                                 const std::vector<ad::Tensor>& h,
                                 const ad::Tensor& query) const {
    const ad::Tensor q_proj = ad::matmul(tape, param("attention.w_query"), query);
    const ad::Tensor& b1 = param("attention.b1");
    const ad::Tensor& w2 = param("attention.w2");
    const ad::Tensor& b2 = param("attention.b2");
    std::vector<ad::Tensor> scores;
    scores.reserve(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
      ad::Tensor hidden = ad::tanh(tape, ad::add(tape, ad::add(tape, q_proj, keys[k]), b1));
      scores.push_back(ad::add(tape, ad::matmul(tape, w2, hidden), b2));
    }
    AttentionOut out;
    out.weights = ad::softmax(tape, ad::concat(tape, scores));
    ad::Tensor c = ad::scale(tape, ad::gather(tape, out.weights, 0), h[0]);
    for (std::size_t k = 1; k < h.size(); ++k)
      c = ad::add(tape, c, ad::scale(tape, ad::gather(tape, out.weights, k), h[k]));
    out.context = c;
    return out;
  }

  AttentionOut attention_context(ad::Tape& tape, const std::vector<ad::Tensor>& h,
                                 const ad::Tensor& query) const {
    return attention_context(tape, attention_keys(tape, h), h, query);
  }

  // -------------------------------------------------------------------------
  // tagging sweep (encoder + attention + user-info head)

  struct TaggingOut {
    Encoded enc;
    std::vector<ad::Tensor> context;  // c_t, shared with the slot layer
    std::vector<ad::Tensor> p_info;   // P^u_t over |U|+1 tags
    std::vector<ad::Tensor> states;   // s^u_t
    std::vector<int> predictions;     // argmax info-tag ids
  };

  TaggingOut run_tagging(ad::Tape& tape, const std::vector<int>& token_ids) const {
    if (cfg_.baseline != BaselineMode::None)
      throw ConfigError("run_tagging: model is configured as a baseline");
    TaggingOut out;
    out.enc = encode(tape, token_ids);
    const std::size_t T = out.enc.h.size();
    const auto keys = attention_keys(tape, out.enc.h);
    const ad::Tensor& wu = param("tagging.w");
    const ad::Tensor& bu = param("tagging.bias");

    if (cfg_.decoder == DecoderVariant::Feedforward) {
      // s^u_t = h_t ⊕ c_t; the attention query is s^u_{t-1} (zero at t=1)
      for (std::size_t t = 0; t < T; ++t) {
        ad::Tensor query =
            t == 0 ? ad::Tensor::zeros({cfg_.query_width()})
                   : ad::concat(tape, {out.enc.h[t - 1], out.context[t - 1]});
        auto att = attention_context(tape, keys, out.enc.h, query);
        out.context.push_back(att.context);
        ad::Tensor s = ad::concat(tape, {out.enc.h[t], att.context});
        out.states.push_back(s);
        out.p_info.push_back(
            ad::softmax(tape, ad::add(tape, ad::matmul(tape, wu, s), bu)));
      }
    } else {
      // unidirectional LSTM decoder fed h_{t-1} ⊕ c_{t-1}, init from h_T
      const ad::LstmParams cell = lstm_params("tagging.cell");
      const std::size_t E2 = cfg_.encoder_width();
      ad::LstmState state{out.enc.h_final, ad::Tensor::zeros({E2})};
      for (std::size_t t = 0; t < T; ++t) {
        auto att = attention_context(tape, keys, out.enc.h, state.h);
        out.context.push_back(att.context);
        ad::Tensor input =
            t == 0 ? ad::Tensor::zeros({2 * E2})
                   : ad::concat(tape, {out.enc.h[t - 1], out.context[t - 1]});
        state = ad::lstm_step(tape, input, state.h, state.c, cell);
        out.states.push_back(state.h);
        out.p_info.push_back(
            ad::softmax(tape, ad::add(tape, ad::matmul(tape, wu, state.h), bu)));
      }
    }
    for (const auto& p : out.p_info)
      out.predictions.push_back(static_cast<int>(argmax(p.value())));
    return out;
  }

  // -------------------------------------------------------------------------
  // distilled slot input

  // Φ_t: every IOB info tag contributes its base type's distance feature
  // scaled by that tag's probability, then the O probability scales the
  // language context. A confidently-O token falls back to pure context.
  ad::Tensor compute_phi(ad::Tape& tape, const ad::Tensor& p_info_t,
                         const std::vector<ad::Tensor>& d_vectors,
                         const ad::Tensor& context_t) const {
    if (p_info_t.size() != cfg_.num_info_tags + 1)
      throw DimensionError("compute_phi: tag distribution has " +
                           std::to_string(p_info_t.size()) + " entries, expected " +
                           std::to_string(cfg_.num_info_tags + 1));
    if (d_vectors.size() != cfg_.num_info_types)
      throw DimensionError("compute_phi: expected one distance vector per info type");
    for (const auto& d : d_vectors)
      if (d.size() != cfg_.dim_d)
        throw DimensionError("compute_phi: distance vector width " +
                             std::to_string(d.size()) + " != dim_d " +
                             std::to_string(cfg_.dim_d));
    if (context_t.size() != cfg_.encoder_width())
      throw DimensionError("compute_phi: context width mismatch");

    std::vector<ad::Tensor> blocks;
    blocks.reserve(cfg_.num_info_tags + 1);
    for (std::size_t j = 0; j < cfg_.num_info_tags; ++j)
      blocks.push_back(
          ad::scale(tape, ad::gather(tape, p_info_t, j), d_vectors[j / 2]));
    blocks.push_back(
        ad::scale(tape, ad::gather(tape, p_info_t, cfg_.num_info_tags), context_t));
    return ad::concat(tape, blocks);
  }

  // -------------------------------------------------------------------------
  // full forward

  struct ForwardOut {
    TaggingOut tagging;
    std::vector<ad::Tensor> p_slot;       // P^s_t over |S|+1 tags
    std::vector<ad::Tensor> slot_states;  // s^s_t
    ad::Tensor p_intent;
    std::vector<int> slot_predictions;
    int intent_prediction = 0;
  };

  // Slot and intent heads on top of a finished tagging sweep; the delta
  // table may come from gold info tags (training) or from the tagging
  // layer's own argmax (inference).
  ForwardOut complete_from_tagging(ad::Tape& tape, TaggingOut tagging,
                                   const PriorDistanceTable& table) const {
    if (table.num_tokens != tagging.enc.h.size() ||
        table.num_types != cfg_.num_info_types)
      throw DimensionError("complete_from_tagging: delta table is " +
                           std::to_string(table.num_tokens) + "x" +
                           std::to_string(table.num_types) + ", expected " +
                           std::to_string(tagging.enc.h.size()) + "x" +
                           std::to_string(cfg_.num_info_types));
    ForwardOut out;
    out.tagging = std::move(tagging);
    const std::size_t T = out.tagging.enc.h.size();
    const ad::Tensor& beta = param("beta");
    const ad::Tensor& ws = param("slot.w");
    const ad::Tensor& bs = param("slot.bias");

    std::vector<ad::Tensor> phi(T);
    for (std::size_t t = 0; t < T; ++t) {
      auto d = distance_features(tape, beta, table, t);
      phi[t] = compute_phi(tape, out.tagging.p_info[t], d, out.tagging.context[t]);
    }

    if (cfg_.decoder == DecoderVariant::Feedforward) {
      for (std::size_t t = 0; t < T; ++t) {
        ad::Tensor s = ad::concat(tape, {out.tagging.enc.h[t], phi[t]});
        out.slot_states.push_back(s);
        out.p_slot.push_back(
            ad::softmax(tape, ad::add(tape, ad::matmul(tape, ws, s), bs)));
      }
    } else {
      const ad::LstmParams cell = lstm_params("slot.cell");
      const std::size_t E2 = cfg_.encoder_width();
      ad::LstmState state{out.tagging.enc.h_final, ad::Tensor::zeros({E2})};
      for (std::size_t t = 0; t < T; ++t) {
        ad::Tensor input =
            t == 0 ? ad::Tensor::zeros({E2 + cfg_.phi_width()})
                   : ad::concat(tape, {out.tagging.enc.h[t - 1], phi[t - 1]});
        state = ad::lstm_step(tape, input, state.h, state.c, cell);
        out.slot_states.push_back(state.h);
        out.p_slot.push_back(
            ad::softmax(tape, ad::add(tape, ad::matmul(tape, ws, state.h), bs)));
      }
    }

    out.p_intent = intent_head(tape, out.tagging.enc, out.slot_states);
    for (const auto& p : out.p_slot)
      out.slot_predictions.push_back(static_cast<int>(argmax(p.value())));
    out.intent_prediction = static_cast<int>(argmax(out.p_intent.value()));
    return out;
  }

  ForwardOut forward(ad::Tape& tape, const std::vector<int>& token_ids,
                     const PriorDistanceTable& table) const {
    return complete_from_tagging(tape, run_tagging(tape, token_ids), table);
  }

  // -------------------------------------------------------------------------
  // baselines

  struct BaselineOut {
    Encoded enc;
    std::vector<ad::Tensor> p_slot;
    std::vector<ad::Tensor> slot_states;
    ad::Tensor p_intent;
    std::vector<int> slot_predictions;
    int intent_prediction = 0;
  };

  // Slot head over h_t ⊕ c_t; the concat-info variant appends one raw delta
  // value per base info type (-1 where absent), identical at every step.
  BaselineOut baseline_forward(ad::Tape& tape, const std::vector<int>& token_ids,
                               const std::vector<double>& info_block = {}) const {
    if (cfg_.baseline == BaselineMode::None)
      throw ConfigError("baseline_forward: model is not configured as a baseline");
    ad::Tensor block;
    if (cfg_.baseline == BaselineMode::AttBirnnConcatInfo) {
      if (info_block.size() != cfg_.num_info_types)
        throw DimensionError("baseline_forward: info block has " +
                             std::to_string(info_block.size()) + " values, expected " +
                             std::to_string(cfg_.num_info_types));
      block = ad::Tensor::from_values({cfg_.num_info_types}, info_block);
    }
    BaselineOut out;
    out.enc = encode(tape, token_ids);
    const std::size_t T = out.enc.h.size();
    const auto keys = attention_keys(tape, out.enc.h);
    const ad::Tensor& ws = param("slot.w");
    const ad::Tensor& bs = param("slot.bias");
    std::vector<ad::Tensor> context;
    for (std::size_t t = 0; t < T; ++t) {
      ad::Tensor query =
          t == 0 ? ad::Tensor::zeros({cfg_.query_width()})
                 : ad::concat(tape, {out.enc.h[t - 1], context[t - 1]});
      auto att = attention_context(tape, keys, out.enc.h, query);
      context.push_back(att.context);
      std::vector<ad::Tensor> parts = {out.enc.h[t], att.context};
      if (block.defined()) parts.push_back(block);
      ad::Tensor s = ad::concat(tape, parts);
      out.slot_states.push_back(s);
      out.p_slot.push_back(
          ad::softmax(tape, ad::add(tape, ad::matmul(tape, ws, s), bs)));
    }
    out.p_intent = intent_head(tape, out.enc, out.slot_states);
    for (const auto& p : out.p_slot)
      out.slot_predictions.push_back(static_cast<int>(argmax(p.value())));
    out.intent_prediction = static_cast<int>(argmax(out.p_intent.value()));
    return out;
  }

 private:
  ad::Tensor intent_head(ad::Tape& tape, const Encoded& enc,
                         const std::vector<ad::Tensor>& slot_states) const {
    ad::Tensor input;
    if (cfg_.intent_source == IntentSource::EncoderFinal) {
      input = enc.h_final;
    } else {
      // fixed-width stand-in for the variable-length concatenation of all
      // slot states
      input = slot_states[0];
      for (std::size_t t = 1; t < slot_states.size(); ++t)
        input = ad::add(tape, input, slot_states[t]);
      input = ad::scalar_mul(tape, 1.0 / static_cast<double>(slot_states.size()), input);
    }
    return ad::softmax(
        tape, ad::add(tape, ad::matmul(tape, param("intent.w"), input),
                      param("intent.bias")));
  }

  ad::LstmParams lstm_params(const std::string& prefix) const {
    return {param(prefix + ".w_input"), param(prefix + ".w_hidden"),
            param(prefix + ".bias")};
  }

  void add_matrix(const std::string& name, ParamGroup g, std::size_t rows,
                  std::size_t cols, Rng& rng) {
    params_.push_back({name, g, ad::glorot_matrix(rows, cols, rng)});
    by_name_[name] = params_.size() - 1;
  }

  void add_bias(const std::string& name, ParamGroup g, std::size_t n) {
    params_.push_back({name, g, ad::Tensor::zeros({n}, true)});
    by_name_[name] = params_.size() - 1;
  }

  void add_lstm(const std::string& prefix, ParamGroup g, std::size_t input,
                std::size_t hidden, Rng& rng) {
    ad::LstmParams cell = ad::make_lstm(input, hidden, rng);
    params_.push_back({prefix + ".w_input", g, cell.w_input});
    by_name_[prefix + ".w_input"] = params_.size() - 1;
    params_.push_back({prefix + ".w_hidden", g, cell.w_hidden});
    by_name_[prefix + ".w_hidden"] = params_.size() - 1;
    params_.push_back({prefix + ".bias", g, cell.bias});
    by_name_[prefix + ".bias"] = params_.size() - 1;
  }

  ModelConfig cfg_;
  std::vector<ModelParam> params_;
  std::map<std::string, std::size_t> by_name_;
};

}  // namespace progslu
