#pragma once

// Experiment harness: the learning-curve matrix (variant x training size x
// resample seed) and the per-epoch training-time comparison, with TSV
// reports and dependency-free SVG line charts.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "progslu/config.hpp"
#include "progslu/corpus.hpp"
#include "progslu/training.hpp"

namespace progslu {

struct ExperimentSpec {
  enum class Kind { LearningCurve, TrainingTime, Both };

  Kind kind = Kind::LearningCurve;
  std::vector<std::string> variants = {"prog", "att_birnn"};
  std::vector<std::size_t> sizes = {100, 200, 400};
  std::size_t num_seeds = 5;
  std::uint64_t base_seed = 1;
  std::string train_data, test_data, dictionary, gazetteer, out_dir;
  std::size_t threads = 2;
  RunConfig run;

  static ExperimentSpec load(const std::string& path) {
    const KeyValues kv = KeyValues::load(path);
    ExperimentSpec s;
    const std::string kind = kv.get("experiment", "learning_curve");
    if (kind == "learning_curve") {
      s.kind = Kind::LearningCurve;
    } else if (kind == "training_time") {
      s.kind = Kind::TrainingTime;
    } else if (kind == "both") {
      s.kind = Kind::Both;
    } else {
      throw ConfigError(path + ": experiment must be learning_curve, training_time, or both");
    }
    s.variants.clear();
    for (const auto& v : detail::split(kv.get("variants", "prog,att_birnn"), ','))
      if (!detail::trim(v).empty()) s.variants.push_back(detail::trim(v));
    s.sizes.clear();
    for (const auto& v : detail::split(kv.get("sizes", "100,200,400"), ','))
      if (!detail::trim(v).empty()) s.sizes.push_back(std::stoull(detail::trim(v)));
    s.num_seeds = kv.get_size("seeds", s.num_seeds);
    s.base_seed = kv.get_u64("base_seed", s.base_seed);
    s.train_data = kv.get("train_data", "");
    s.test_data = kv.get("test_data", "");
    s.out_dir = kv.get("out", "");
    s.threads = kv.get_size("threads", s.threads);
    s.run = RunConfig::from_kv(kv);
    kv.reject_unknown(path);
    if (s.variants.empty()) throw ConfigError(path + ": no variants");
    if (s.num_seeds < 1) throw ConfigError(path + ": seeds must be >= 1");
    if (s.train_data.empty() || s.test_data.empty() || s.out_dir.empty())
      throw ConfigError(path + ": train_data, test_data, and out are required");
    s.dictionary = s.run.dictionary;
    s.gazetteer = s.run.gazetteer;
    if (s.dictionary.empty() || s.gazetteer.empty())
      throw ConfigError(path + ": dictionary and gazetteer are required");
    return s;
  }
};

inline RunConfig apply_variant(RunConfig run, const std::string& variant) {
  if (variant == "prog") {
    run.baseline = BaselineMode::None;
    run.decoder = DecoderVariant::Feedforward;
  } else if (variant == "prog_lstm") {
    run.baseline = BaselineMode::None;
    run.decoder = DecoderVariant::Lstm;
  } else if (variant == "att_birnn") {
    run.baseline = BaselineMode::AttBirnn;
  } else if (variant == "att_birnn_concat_info") {
    run.baseline = BaselineMode::AttBirnnConcatInfo;
  } else {
    throw ConfigError("unknown model variant \"" + variant + "\"");
  }
  return run;
}

// ---------------------------------------------------------------------------
// SVG line charts

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<SvgSeries>& series) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#ff7f0e", "#9467bd", "#8c564b"};
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("svg: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R
      << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\""
      << H - B << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\">" << y_label << "</text>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
      << num(xmin) << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16
      << "\" text-anchor=\"middle\">" << num(xmax) << "</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << H - B + 4 << "\" text-anchor=\"end\">"
      << num(ymin) << "</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\">"
      << num(ymax) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = colors[i % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points)
      out << std::fixed << std::setprecision(2) << sx(x) << ',' << sy(y) << ' ';
    out.unsetf(std::ios::fixed);
    out << "\"/>\n";
    const double ly = T + 16 * static_cast<double>(i);
    out << "<line x1=\"" << W - R - 120 << "\" y1=\"" << ly << "\" x2=\""
        << W - R - 100 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R - 94 << "\" y=\"" << ly + 4 << "\">"
        << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// learning curve

struct CellResult {
  std::string variant;
  std::size_t size = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  EvalMetrics metrics;
};

// One cell: resample the training subset, train both phases, evaluate on the
// held-out set. Baselines skip phase 1.
inline CellResult run_experiment_cell(const ExperimentSpec& spec,
                                      const std::vector<Utterance>& train,
                                      const std::vector<Utterance>& test,
                                      const UserInfoDictionary& dict,
                                      const Gazetteer& gaz,
                                      const std::string& variant,
                                      std::size_t size, std::uint64_t seed) {
  CellResult cell{variant, size, seed, false, "", {}};
  try {
    std::vector<Utterance> subset = sample_subset(train, size, seed);
    const Vocab vocab = Vocab::build(subset, dict);
    RunConfig run = apply_variant(spec.run, variant);
    run.train.seed = seed;  // resamples vary data and model seeds together
    run.train.eval_each_epoch = false;
    ModelConfig mc = run.to_model_config(vocab, dict);
    ProgModel model(mc);
    Trainer trainer(model, vocab, dict, gaz, run.train);
    if (mc.baseline == BaselineMode::None) trainer.train_phase1(subset);
    trainer.train_phase2(subset);
    cell.metrics = evaluate_model(model, vocab, dict, gaz, test);
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
  }
  return cell;
}

inline std::vector<CellResult> run_learning_curve_cells(
    const ExperimentSpec& spec, const std::vector<Utterance>& train,
    const std::vector<Utterance>& test, const UserInfoDictionary& dict,
    const Gazetteer& gaz) {
  struct Task {
    std::string variant;
    std::size_t size;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& variant : spec.variants)
    for (std::size_t size : spec.sizes)
      for (std::size_t i = 0; i < spec.num_seeds; ++i)
        tasks.push_back({variant, size, spec.base_seed + i});

  std::vector<CellResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = run_experiment_cell(spec, train, test, dict, gaz,
                                       tasks[i].variant, tasks[i].size,
                                       tasks[i].seed);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, spec.threads);
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i + 1 < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

struct AggregateRow {
  std::string variant;
  std::size_t size = 0;
  std::size_t cells = 0;
  double f1_mean = 0.0, f1_std = 0.0;
  double intent_mean = 0.0, intent_std = 0.0;
};

inline std::vector<AggregateRow> aggregate_cells(const ExperimentSpec& spec,
                                                 const std::vector<CellResult>& cells) {
  std::vector<AggregateRow> rows;
  for (const auto& variant : spec.variants)
    for (std::size_t size : spec.sizes) {
      AggregateRow row;
      row.variant = variant;
      row.size = size;
      std::vector<double> f1s, intents;
      for (const auto& c : cells)
        if (c.variant == variant && c.size == size && !c.failed) {
          f1s.push_back(c.metrics.slot_f1);
          intents.push_back(c.metrics.intent_acc);
        }
      row.cells = f1s.size();
      auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) return;
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        sd = 0.0;
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size()));
      };
      mean_std(f1s, row.f1_mean, row.f1_std);
      mean_std(intents, row.intent_mean, row.intent_std);
      rows.push_back(row);
    }
  return rows;
}

inline std::vector<CellResult> run_learning_curve(const ExperimentSpec& spec) {
  const UserInfoDictionary dict = UserInfoDictionary::load(spec.dictionary);
  const Gazetteer gaz = Gazetteer::load(spec.gazetteer);
  std::vector<Utterance> train = load_dataset(spec.train_data, dict);
  std::vector<Utterance> test = load_dataset(spec.test_data, dict);

  const auto cells = run_learning_curve_cells(spec, train, test, dict, gaz);
  const auto rows = aggregate_cells(spec, cells);

  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  {
    std::ofstream out(fs::path(spec.out_dir) / "learning_curve.tsv", std::ios::binary);
    out << "variant\tsize\tseed\tstatus\tslot_f1\tintent_acc\tinfo_acc\n";
    for (const auto& c : cells) {
      out << c.variant << '\t' << c.size << '\t' << c.seed << '\t'
          << (c.failed ? "failed" : "ok") << '\t';
      if (c.failed) {
        out << "-\t-\t-\n";
      } else {
        out << std::setprecision(10) << c.metrics.slot_f1 << '\t'
            << c.metrics.intent_acc << '\t' << c.metrics.info_acc << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(spec.out_dir) / "learning_curve_mean.tsv",
                      std::ios::binary);
    out << "variant\tsize\tcells\tslot_f1_mean\tslot_f1_std\tintent_acc_mean\tintent_acc_std\n";
    for (const auto& r : rows)
      out << r.variant << '\t' << r.size << '\t' << r.cells << '\t'
          << std::setprecision(10) << r.f1_mean << '\t' << r.f1_std << '\t'
          << r.intent_mean << '\t' << r.intent_std << '\n';
  }
  for (const char* metric : {"slot_f1", "intent_acc"}) {
    std::vector<SvgSeries> series;
    for (const auto& variant : spec.variants) {
      SvgSeries s;
      s.label = variant;
      for (const auto& r : rows)
        if (r.variant == variant && r.cells > 0)
          s.points.emplace_back(static_cast<double>(r.size),
                                std::string(metric) == "slot_f1" ? r.f1_mean
                                                                 : r.intent_mean);
      series.push_back(std::move(s));
    }
    write_svg_chart((fs::path(spec.out_dir) / (std::string(metric) + ".svg")).string(),
                    std::string(metric) + " vs training size", "training size",
                    metric, series);
  }
  return cells;
}

// ---------------------------------------------------------------------------
// training-time comparison

struct EpochPoint {
  std::string variant;
  int phase = 0;
  std::size_t epoch = 0;  // global index, phase-1 epochs included
  double slot_f1 = 0.0;
};

struct TrainingTimeReport {
  std::vector<EpochPoint> curve;
  struct VariantSummary {
    std::string variant;
    double best_f1 = 0.0;
    std::size_t epochs_to_target = 0;
    std::size_t total_epochs = 0;
  };
  double target_f1 = 0.0;
  std::vector<VariantSummary> summaries;
};

// Per-epoch held-out slot F1 for every variant. Phase-1 epochs count toward
// the epoch axis: the slot head is simply evaluated as-is during them.
inline TrainingTimeReport run_training_time(const ExperimentSpec& spec) {
  const UserInfoDictionary dict = UserInfoDictionary::load(spec.dictionary);
  const Gazetteer gaz = Gazetteer::load(spec.gazetteer);
  std::vector<Utterance> train = load_dataset(spec.train_data, dict);
  std::vector<Utterance> test = load_dataset(spec.test_data, dict);
  const Vocab vocab = Vocab::build(train, dict);

  TrainingTimeReport report;
  for (const auto& variant : spec.variants) {
    RunConfig run = apply_variant(spec.run, variant);
    ModelConfig mc = run.to_model_config(vocab, dict);
    ProgModel model(mc);

    // phase 1 one epoch at a time so the held-out F1 curve covers it
    TrainConfig p1 = run.train;
    p1.eval_each_epoch = false;
    p1.phase1_epochs = 1;
    Trainer trainer(model, vocab, dict, gaz, p1);
    std::size_t global = 0;
    if (mc.baseline == BaselineMode::None) {
      for (std::size_t e = 0; e < run.train.phase1_epochs; ++e) {
        trainer.train_phase1(train);
        const EvalMetrics m = evaluate_model(model, vocab, dict, gaz, test);
        report.curve.push_back({variant, 1, ++global, m.slot_f1});
      }
    }
    for (std::size_t e = 0; e < run.train.phase2_epochs; ++e) {
      trainer.train_phase2(train);
      const EvalMetrics m = evaluate_model(model, vocab, dict, gaz, test);
      report.curve.push_back({variant, 2, ++global, m.slot_f1});
    }
  }

  // target: every variant's best, discounted 2%, take the lowest
  double target = std::numeric_limits<double>::infinity();
  for (const auto& variant : spec.variants) {
    double best = 0.0;
    for (const auto& p : report.curve)
      if (p.variant == variant) best = std::max(best, p.slot_f1);
    target = std::min(target, best * 0.98);
  }
  report.target_f1 = target;
  for (const auto& variant : spec.variants) {
    TrainingTimeReport::VariantSummary s;
    s.variant = variant;
    for (const auto& p : report.curve)
      if (p.variant == variant) {
        s.total_epochs = std::max(s.total_epochs, p.epoch);
        s.best_f1 = std::max(s.best_f1, p.slot_f1);
        if (s.epochs_to_target == 0 && p.slot_f1 >= target) s.epochs_to_target = p.epoch;
      }
    report.summaries.push_back(s);
  }

  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  {
    std::ofstream out(fs::path(spec.out_dir) / "training_time.tsv", std::ios::binary);
    out << "variant\tphase\tepoch\tslot_f1\n";
    for (const auto& p : report.curve)
      out << p.variant << '\t' << p.phase << '\t' << p.epoch << '\t'
          << std::setprecision(10) << p.slot_f1 << '\n';
  }
  {
    std::ofstream out(fs::path(spec.out_dir) / "epochs_to_target.tsv", std::ios::binary);
    out << "variant\tbest_f1\ttarget_f1\tepochs_to_target\ttotal_epochs\n";
    for (const auto& s : report.summaries)
      out << s.variant << '\t' << std::setprecision(10) << s.best_f1 << '\t'
          << report.target_f1 << '\t' << s.epochs_to_target << '\t'
          << s.total_epochs << '\n';
  }
  {
    std::vector<SvgSeries> series;
    for (const auto& variant : spec.variants) {
      SvgSeries s;
      s.label = variant;
      for (const auto& p : report.curve)
        if (p.variant == variant)
          s.points.emplace_back(static_cast<double>(p.epoch), p.slot_f1);
      series.push_back(std::move(s));
    }
    write_svg_chart((fs::path(spec.out_dir) / "training_time.svg").string(),
                    "held-out slot F1 per epoch", "epoch", "slot_f1", series);
  }
  return report;
}

}  // namespace progslu
