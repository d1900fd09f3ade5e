#pragma once

// The three losses, Adam with gradient clipping, the two-phase progressive
// schedule, per-epoch metric logging, inference helpers, and checkpoints.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "progslu/autodiff.hpp"
#include "progslu/corpus.hpp"
#include "progslu/distill.hpp"
#include "progslu/eval.hpp"
#include "progslu/model.hpp"

namespace progslu {

enum class DeltaSource { Gold, Predicted };

struct TrainConfig {
  std::size_t phase1_epochs = 3;
  std::size_t phase2_epochs = 20;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  std::uint64_t seed = 42;
  DeltaSource delta_source = DeltaSource::Gold;
  bool shuffle = true;
  // Normalize the tagging loss by the class count instead of the utterance
  // length (an earlier formulation of the objective; off by default).
  bool draft_loss_norm = false;
  bool eval_each_epoch = true;

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be > 0");
    if (clip_norm < 0.0) throw ConfigError("train config: clip_norm must be >= 0");
  }
};

struct EpochLog {
  int phase = 0;
  std::size_t epoch = 0;  // global, monotone across phases
  double loss_u = std::numeric_limits<double>::quiet_NaN();
  double loss_s = std::numeric_limits<double>::quiet_NaN();
  double loss_i = std::numeric_limits<double>::quiet_NaN();
  double info_acc = std::numeric_limits<double>::quiet_NaN();
  double slot_f1 = std::numeric_limits<double>::quiet_NaN();
  double intent_acc = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

inline void write_epoch_logs(std::ostream& out, const std::vector<EpochLog>& logs) {
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string("-");
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
  };
  out << "phase\tepoch\tloss_u\tloss_s\tloss_i\tinfo_acc\tslot_f1\tintent_acc\tseconds\n";
  for (const auto& l : logs) {
    out << l.phase << '\t' << l.epoch << '\t' << cell(l.loss_u) << '\t'
        << cell(l.loss_s) << '\t' << cell(l.loss_i) << '\t' << cell(l.info_acc)
        << '\t' << cell(l.slot_f1) << '\t' << cell(l.intent_acc) << '\t'
        << std::fixed << std::setprecision(3) << l.seconds << '\n';
    out.unsetf(std::ios::fixed);
  }
}

// ---------------------------------------------------------------------------
// losses

// L_u: mean-per-token cross entropy of the info-tag distributions. The
// draft_norm variant divides by the class count instead of the length.
inline ad::Tensor loss_userinfo(ad::Tape& tape,
                                const std::vector<ad::Tensor>& p_info,
                                const std::vector<int>& gold_tags,
                                bool draft_norm = false) {
  if (p_info.size() != gold_tags.size())
    throw DimensionError("loss_userinfo: " + std::to_string(p_info.size()) +
                         " distributions vs " + std::to_string(gold_tags.size()) +
                         " tags");
  ad::Tensor total = ad::cross_entropy(tape, p_info[0],
                                       static_cast<std::size_t>(gold_tags[0]));
  for (std::size_t t = 1; t < p_info.size(); ++t)
    total = ad::add(tape, total,
                    ad::cross_entropy(tape, p_info[t],
                                      static_cast<std::size_t>(gold_tags[t])));
  const double norm = draft_norm ? static_cast<double>(p_info[0].size())
                                 : static_cast<double>(p_info.size());
  return ad::scalar_mul(tape, 1.0 / norm, total);
}

inline ad::Tensor loss_slot(ad::Tape& tape, const std::vector<ad::Tensor>& p_slot,
                            const std::vector<int>& gold_tags) {
  return loss_userinfo(tape, p_slot, gold_tags, false);
}

// L_I: unnormalized single-label cross entropy.
inline ad::Tensor loss_intent(ad::Tape& tape, const ad::Tensor& p_intent,
                              int gold_intent) {
  return ad::cross_entropy(tape, p_intent, static_cast<std::size_t>(gold_intent));
}

// ---------------------------------------------------------------------------
// optimizer

class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps, double clip)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), clip_(clip) {}

  explicit AdamOptimizer(const TrainConfig& cfg)
      : AdamOptimizer(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                      cfg.adam_eps, cfg.clip_norm) {}

  // One update over the given parameters from their current gradients,
  // clipping by the global gradient norm first.
  void step(const std::vector<ad::NamedParam>& params) {
    double sq = 0.0;
    for (const auto& p : params)
      for (double g : p.tensor.grad()) sq += g * g;
    const double norm = std::sqrt(sq);
    const double scale = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;

    for (const auto& p : params) {
      State& st = state_[p.name];
      auto& value = p.tensor.value();
      const auto& grad = p.tensor.grad();
      if (st.m.empty()) {
        st.m.assign(value.size(), 0.0);
        st.v.assign(value.size(), 0.0);
      }
      st.t += 1;
      const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(st.t));
      const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(st.t));
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i] * scale;
        st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g;
        st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g * g;
        value[i] -= lr_ * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps_);
      }
    }
  }

 private:
  struct State {
    std::vector<double> m, v;
    std::size_t t = 0;
  };
  double lr_, beta1_, beta2_, eps_, clip_;
  std::map<std::string, State> state_;
};

// ---------------------------------------------------------------------------
// inference

struct Prediction {
  std::vector<std::string> info_tags;
  std::vector<std::string> slot_tags;
  std::string intent;
};

inline std::vector<int> gold_info_ids(const Utterance& u, const Vocab& vocab) {
  std::vector<int> out;
  out.reserve(u.info_tags.size());
  for (const auto& tag : u.info_tags) out.push_back(vocab.info_tag_id(tag));
  return out;
}

inline std::vector<int> gold_slot_ids(const Utterance& u, const Vocab& vocab) {
  std::vector<int> out;
  out.reserve(u.slot_tags.size());
  for (const auto& tag : u.slot_tags) out.push_back(vocab.slot_tag_id(tag));
  return out;
}

// Delta table from an info-tag sequence (gold or predicted; predicted tags
// are repaired before span merging).
inline PriorDistanceTable delta_table_for(const Utterance& u,
                                          std::vector<std::string> info_tags,
                                          const UserInfoDictionary& dict,
                                          const Gazetteer& gaz) {
  repair_iob(info_tags);
  return compute_delta(u, merge_spans(info_tags), u.user_info, dict, gaz);
}

// Per-utterance fixed info block for the concat baseline: the raw delta of
// the first resolvable gold span of each base type, -1 where absent. The
// baseline has no tagging head, so its spans come from the gold info tags.
inline std::vector<double> baseline_info_block(const Utterance& u,
                                               const UserInfoDictionary& dict,
                                               const Gazetteer& gaz) {
  std::vector<double> block(dict.num_types(), kDeltaMismatch);
  const PriorDistanceTable table =
      compute_delta(u, merge_spans(u.info_tags), u.user_info, dict, gaz);
  for (std::size_t j = 0; j < dict.num_types(); ++j)
    for (std::size_t t = 0; t < table.num_tokens; ++t)
      if (table.raw_at(t, j) >= 0.0) {
        block[j] = table.raw_at(t, j);
        break;
      }
  return block;
}

inline std::vector<std::string> info_tag_strings(const std::vector<int>& ids,
                                                 const Vocab& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(vocab.info_tag(static_cast<std::size_t>(id)));
  return out;
}

// Full inference pass: predicted info tags drive the delta table.
inline Prediction predict(const ProgModel& model, const Vocab& vocab,
                          const UserInfoDictionary& dict, const Gazetteer& gaz,
                          const Utterance& u) {
  const std::vector<int> ids = vocab.encode_tokens(u.tokens);
  ad::Tape tape;
  Prediction out;
  if (model.config().baseline != BaselineMode::None) {
    std::vector<double> block;
    if (model.config().baseline == BaselineMode::AttBirnnConcatInfo)
      block = baseline_info_block(u, dict, gaz);
    auto fwd = model.baseline_forward(tape, ids, block);
    for (int id : fwd.slot_predictions)
      out.slot_tags.push_back(vocab.slot_tag(static_cast<std::size_t>(id)));
    out.intent = vocab.intent(static_cast<std::size_t>(fwd.intent_prediction));
    return out;
  }
  auto tagging = model.run_tagging(tape, ids);
  out.info_tags = info_tag_strings(tagging.predictions, vocab);
  const PriorDistanceTable table = delta_table_for(u, out.info_tags, dict, gaz);
  auto fwd = model.complete_from_tagging(tape, std::move(tagging), table);
  for (int id : fwd.slot_predictions)
    out.slot_tags.push_back(vocab.slot_tag(static_cast<std::size_t>(id)));
  out.intent = vocab.intent(static_cast<std::size_t>(fwd.intent_prediction));
  return out;
}

struct EvalMetrics {
  double slot_f1 = 0.0;
  double slot_token_acc = 0.0;
  double intent_acc = 0.0;
  double info_acc = 0.0;
  std::size_t repaired_tags = 0;
};

inline EvalMetrics evaluate_model(const ProgModel& model, const Vocab& vocab,
                                  const UserInfoDictionary& dict,
                                  const Gazetteer& gaz,
                                  const std::vector<Utterance>& data) {
  SpanF1Scorer scorer;
  std::vector<std::vector<std::string>> pred_slots, gold_slots, pred_infos, gold_infos;
  std::vector<std::string> pred_intents, gold_intents;
  for (const auto& u : data) {
    Prediction p = predict(model, vocab, dict, gaz, u);
    scorer.add(p.slot_tags, u.slot_tags);
    pred_slots.push_back(p.slot_tags);
    gold_slots.push_back(u.slot_tags);
    if (!p.info_tags.empty()) {
      pred_infos.push_back(p.info_tags);
      gold_infos.push_back(u.info_tags);
    }
    pred_intents.push_back(p.intent);
    gold_intents.push_back(u.intent);
  }
  EvalMetrics m;
  m.slot_f1 = scorer.result().f1;
  m.slot_token_acc = tag_accuracy(pred_slots, gold_slots);
  m.intent_acc = intent_accuracy(pred_intents, gold_intents);
  m.info_acc = pred_infos.empty() ? 0.0 : info_tag_accuracy(pred_infos, gold_infos);
  m.repaired_tags = scorer.repaired_tags();
  return m;
}

// ---------------------------------------------------------------------------
// training

class Trainer {
 public:
  Trainer(ProgModel& model, const Vocab& vocab, const UserInfoDictionary& dict,
          const Gazetteer& gaz, const TrainConfig& cfg)
      : model_(model),
        vocab_(vocab),
        dict_(dict),
        gaz_(gaz),
        cfg_(cfg),
        opt_(cfg),
        rng_(cfg.seed) {
    cfg_.validate();
    snapshot_best();  // epoch-0 state, so zero-epoch runs still checkpoint
  }

  const TrainConfig& config() const { return cfg_; }

  // Phase 1: the coarse task. Optimizes encoder + tagging parameters on the
  // user-info tagging loss; everything else stays bitwise untouched.
  std::vector<EpochLog> train_phase1(const std::vector<Utterance>& data) {
    if (model_.config().baseline != BaselineMode::None)
      throw ConfigError("train_phase1: baselines have no tagging head");
    require_info_tags(data);
    const auto params =
        model_.group_params({ParamGroup::Encoder, ParamGroup::Tagging});
    std::vector<EpochLog> logs;
    for (std::size_t e = 0; e < cfg_.phase1_epochs; ++e) {
      const auto start = std::chrono::steady_clock::now();
      double loss_sum = 0.0;
      for (std::size_t i : epoch_order(data.size())) {
        const Utterance& u = data[i];
        ad::Tape tape;
        auto tagging = model_.run_tagging(tape, vocab_.encode_tokens(u.tokens));
        ad::Tensor loss = loss_userinfo(tape, tagging.p_info,
                                        gold_info_ids(u, vocab_),
                                        cfg_.draft_loss_norm);
        guard_finite(loss.item());
        loss_sum += loss.item();
        for (const auto& p : params) p.tensor.zero_grad();
        tape.backward(loss);
        opt_.step(params);
      }
      EpochLog log;
      log.phase = 1;
      log.epoch = ++epoch_;
      log.loss_u = loss_sum / static_cast<double>(data.size());
      if (cfg_.eval_each_epoch) log.info_acc = info_accuracy_on(data);
      log.seconds = elapsed(start);
      logs.push_back(log);
    }
    return logs;
  }

  // Phase 2: slot filling and intent jointly (L_s + L_I), fine-tuning all
  // parameter groups including the distance scaling.
  std::vector<EpochLog> train_phase2(const std::vector<Utterance>& data,
                                     const std::vector<Utterance>* eval_data = nullptr) {
    const bool is_baseline = model_.config().baseline != BaselineMode::None;
    if (!is_baseline) require_info_tags(data);
    const auto params =
        is_baseline
            ? model_.group_params({ParamGroup::Encoder, ParamGroup::Slot,
                                   ParamGroup::Intent})
            : model_.all_params();
    std::vector<EpochLog> logs;
    for (std::size_t e = 0; e < cfg_.phase2_epochs; ++e) {
      const auto start = std::chrono::steady_clock::now();
      double loss_s_sum = 0.0, loss_i_sum = 0.0, loss_u_sum = 0.0;
      for (std::size_t i : epoch_order(data.size())) {
        const Utterance& u = data[i];
        const std::vector<int> ids = vocab_.encode_tokens(u.tokens);
        const std::vector<int> slot_ids = gold_slot_ids(u, vocab_);
        ad::Tape tape;
        ad::Tensor ls, li;
        if (is_baseline) {
          std::vector<double> block;
          if (model_.config().baseline == BaselineMode::AttBirnnConcatInfo)
            block = baseline_info_block(u, dict_, gaz_);
          auto fwd = model_.baseline_forward(tape, ids, block);
          ls = loss_slot(tape, fwd.p_slot, slot_ids);
          li = loss_intent(tape, fwd.p_intent, vocab_.intent_id(u.intent));
        } else {
          auto tagging = model_.run_tagging(tape, ids);
          const PriorDistanceTable table =
              cfg_.delta_source == DeltaSource::Gold
                  ? delta_table_for(u, u.info_tags, dict_, gaz_)
                  : delta_table_for(u, info_tag_strings(tagging.predictions, vocab_),
                                    dict_, gaz_);
          loss_u_sum += plain_userinfo_loss(tagging.p_info, gold_info_ids(u, vocab_));
          auto fwd = model_.complete_from_tagging(tape, std::move(tagging), table);
          ls = loss_slot(tape, fwd.p_slot, slot_ids);
          li = loss_intent(tape, fwd.p_intent, vocab_.intent_id(u.intent));
        }
        ad::Tensor loss = ad::add(tape, ls, li);
        guard_finite(loss.item());
        loss_s_sum += ls.item();
        loss_i_sum += li.item();
        for (const auto& p : params) p.tensor.zero_grad();
        tape.backward(loss);
        opt_.step(params);
      }
      EpochLog log;
      log.phase = 2;
      log.epoch = ++epoch_;
      const double n = static_cast<double>(data.size());
      log.loss_s = loss_s_sum / n;
      log.loss_i = loss_i_sum / n;
      if (!is_baseline) log.loss_u = loss_u_sum / n;
      if (cfg_.eval_each_epoch) {
        const EvalMetrics m = evaluate_model(model_, vocab_, dict_, gaz_,
                                             eval_data ? *eval_data : data);
        log.slot_f1 = m.slot_f1;
        log.intent_acc = m.intent_acc;
        if (!is_baseline) log.info_acc = m.info_acc;
        if (m.slot_f1 > best_f1_) {
          best_f1_ = m.slot_f1;
          snapshot_best();
        }
      } else {
        snapshot_best();  // without eval the latest state is the best known
      }
      log.seconds = elapsed(start);
      logs.push_back(log);
    }
    return logs;
  }

  double best_f1() const { return best_f1_; }

  // Parameter values at the best logged slot F1 (or the latest state when
  // per-epoch eval is off).
  const std::vector<std::vector<double>>& best_values() const { return best_values_; }

  void restore_best() {
    const auto& params = model_.parameters();
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i].tensor.value() = best_values_[i];
  }

 private:
  void snapshot_best() {
    best_values_.clear();
    for (const auto& p : model_.parameters()) best_values_.push_back(p.tensor.value());
  }

  void require_info_tags(const std::vector<Utterance>& data) const {
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].info_tags.size() != data[i].tokens.size())
        throw ConfigError("training: utterance " + std::to_string(i) +
                          " has no derived info tags");
  }

  std::vector<std::size_t> epoch_order(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (cfg_.shuffle) rng_.shuffle(idx);
    return idx;
  }

  double info_accuracy_on(const std::vector<Utterance>& data) {
    std::vector<std::vector<std::string>> preds, golds;
    for (const auto& u : data) {
      ad::Tape tape;
      auto tagging = model_.run_tagging(tape, vocab_.encode_tokens(u.tokens));
      preds.push_back(info_tag_strings(tagging.predictions, vocab_));
      golds.push_back(u.info_tags);
    }
    return info_tag_accuracy(preds, golds);
  }

  // Scalar L_u for logging during phase 2; no tape involvement.
  static double plain_userinfo_loss(const std::vector<ad::Tensor>& p_info,
                                    const std::vector<int>& gold) {
    double total = 0.0;
    for (std::size_t t = 0; t < p_info.size(); ++t)
      total -= std::log(std::max(p_info[t].value()[static_cast<std::size_t>(gold[t])],
                                 ad::kProbFloor));
    return total / static_cast<double>(p_info.size());
  }

  static void guard_finite(double loss) {
    if (!std::isfinite(loss)) throw Error("training: loss diverged (non-finite)");
  }

  static double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }

  ProgModel& model_;
  const Vocab& vocab_;
  const UserInfoDictionary& dict_;
  const Gazetteer& gaz_;
  TrainConfig cfg_;
  AdamOptimizer opt_;
  Rng rng_;
  std::size_t epoch_ = 0;
  double best_f1_ = -1.0;
  std::vector<std::vector<double>> best_values_;
};

}  // namespace progslu
