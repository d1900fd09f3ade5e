#pragma once

// Span-level F1 with conlleval semantics, plus token/utterance accuracies.

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "progslu/corpus.hpp"
#include "progslu/distill.hpp"
#include "progslu/errors.hpp"

namespace progslu {

// I-X with no open span of type X becomes B-X. Returns the repair count.
inline std::size_t repair_iob(std::vector<std::string>& tags) {
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!iob_is_inside(tags[i])) continue;
    const bool opened = i > 0 &&
                        (iob_is_begin(tags[i - 1]) || iob_is_inside(tags[i - 1])) &&
                        iob_stem(tags[i - 1]) == iob_stem(tags[i]);
    if (!opened) {
      tags[i] = "B-" + iob_stem(tags[i]);
      ++repaired;
    }
  }
  return repaired;
}

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Micro-aggregated span counts across any number of sequences. A predicted
// span is correct only when type, start, and end all match a gold span.
class SpanF1Scorer {
 public:
  void add(const std::vector<std::string>& pred,
           const std::vector<std::string>& gold) {
    if (pred.size() != gold.size())
      throw DimensionError("span_f1: " + std::to_string(pred.size()) +
                           " predicted tags vs " + std::to_string(gold.size()) +
                           " gold tags");
    std::vector<std::string> p = pred, g = gold;
    repaired_ += repair_iob(p);
    repaired_ += repair_iob(g);
    const auto ps = merge_spans(p);
    const auto gs = merge_spans(g);
    std::set<std::tuple<std::string, std::size_t, std::size_t>> gold_set;
    for (const auto& s : gs) gold_set.insert({s.type, s.start, s.end});
    for (const auto& s : ps)
      if (gold_set.count({s.type, s.start, s.end})) ++correct_;
    pred_ += ps.size();
    gold_ += gs.size();
  }

  std::size_t predicted_spans() const { return pred_; }
  std::size_t gold_spans() const { return gold_; }
  std::size_t correct_spans() const { return correct_; }
  std::size_t repaired_tags() const { return repaired_; }

  F1Result result() const {
    F1Result r;
    r.precision = pred_ ? static_cast<double>(correct_) / static_cast<double>(pred_) : 0.0;
    r.recall = gold_ ? static_cast<double>(correct_) / static_cast<double>(gold_) : 0.0;
    r.f1 = (r.precision + r.recall > 0.0)
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
  }

 private:
  std::size_t pred_ = 0, gold_ = 0, correct_ = 0, repaired_ = 0;
};

inline F1Result span_f1(const std::vector<std::string>& pred,
                        const std::vector<std::string>& gold) {
  SpanF1Scorer scorer;
  scorer.add(pred, gold);
  return scorer.result();
}

inline double intent_accuracy(const std::vector<std::string>& preds,
                              const std::vector<std::string>& golds) {
  if (preds.size() != golds.size())
    throw DimensionError("intent_accuracy: " + std::to_string(preds.size()) +
                         " predictions vs " + std::to_string(golds.size()) +
                         " labels");
  if (preds.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

// Token-level accuracy over parallel tag sequences.
inline double tag_accuracy(const std::vector<std::vector<std::string>>& preds,
                           const std::vector<std::vector<std::string>>& golds) {
  if (preds.size() != golds.size())
    throw DimensionError("tag_accuracy: sequence count mismatch");
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != golds[i].size())
      throw DimensionError("tag_accuracy: length mismatch at sequence " +
                           std::to_string(i));
    for (std::size_t t = 0; t < preds[i].size(); ++t) {
      ++total;
      if (preds[i][t] == golds[i][t]) ++hit;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

inline double info_tag_accuracy(const std::vector<std::vector<std::string>>& preds,
                                const std::vector<std::vector<std::string>>& golds) {
  return tag_accuracy(preds, golds);
}

}  // namespace progslu
