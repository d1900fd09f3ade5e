// progslu: synthesize corpora and user info, train and evaluate the
// progressive slot-filling model, tag single utterances, run gradient
// checks, and drive the experiment matrix.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "progslu/checkpoint.hpp"
#include "progslu/config.hpp"
#include "progslu/corpus.hpp"
#include "progslu/experiment.hpp"
#include "progslu/gazetteer.hpp"
#include "progslu/gradcheck.hpp"
#include "progslu/synth.hpp"
#include "progslu/training.hpp"

namespace fs = std::filesystem;
using namespace progslu;

namespace {

// The dictionary shipped with the project; used when a command does not
// take an explicit --dictionary.
UserInfoDictionary default_dictionary() {
  return UserInfoDictionary::from_entries(
      {{"loc", {DistanceKind::Geo, {"fromloc", "toloc", "stoploc"}}},
       {"depart_period", {DistanceKind::Time, {"depart_time"}}},
       {"arrive_period", {DistanceKind::Time, {"arrive_time"}}}});
}

UserInfoDictionary dictionary_from(const std::string& path) {
  return path.empty() ? default_dictionary() : UserInfoDictionary::load(path);
}

struct GenCorpusArgs {
  std::string gazetteer, out, test_out;
  std::size_t n = 500, test_n = 0;
  std::uint64_t seed = 1;
};

int cmd_gen_corpus(const GenCorpusArgs& a) {
  const Gazetteer gaz = Gazetteer::load(a.gazetteer);
  if (a.test_n > 0) {
    if (a.test_out.empty())
      throw ArgumentError("gen-corpus: --test-n requires --test-out");
    auto [train, test] = generate_corpus_split(a.n, a.test_n, a.seed, gaz);
    save_dataset(a.out, train);
    save_dataset(a.test_out, test);
    std::cout << "wrote " << train.size() << " utterances to " << a.out << " and "
              << test.size() << " to " << a.test_out << "\n";
  } else {
    auto data = generate_synthetic_corpus(a.n, a.seed, gaz);
    save_dataset(a.out, data);
    std::cout << "wrote " << data.size() << " utterances to " << a.out << "\n";
  }
  return 0;
}

struct SynthArgs {
  std::string data, gazetteer, out, dictionary;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  const UserInfoDictionary dict = dictionary_from(a.dictionary);
  const Gazetteer gaz = Gazetteer::load(a.gazetteer);
  std::vector<Utterance> data = load_dataset(a.data, dict);
  std::vector<std::string> log;
  synthesize_user_info(data, gaz, a.seed, &log);
  save_dataset(a.out, data);
  std::size_t with_info = 0;
  for (const auto& u : data)
    if (!u.user_info.empty()) ++with_info;
  for (const auto& line : log) std::cerr << "note: " << line << "\n";
  std::cout << "wrote " << data.size() << " utterances (" << with_info
            << " with user info) to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string config, data, out;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig run = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  if (run.dictionary.empty())
    throw ConfigError("train: config must set dictionary = <path>");
  if (run.gazetteer.empty())
    throw ConfigError("train: config must set gazetteer = <path>");
  const UserInfoDictionary dict = UserInfoDictionary::load(run.dictionary);
  const Gazetteer gaz = Gazetteer::load(run.gazetteer);
  std::vector<Utterance> data = load_dataset(a.data, dict);
  std::vector<Utterance> eval_data;
  if (!run.eval_data.empty()) eval_data = load_dataset(run.eval_data, dict);

  const Vocab vocab = Vocab::build(data, dict);
  ProgModel model(run.to_model_config(vocab, dict));
  Trainer trainer(model, vocab, dict, gaz, run.train);

  std::vector<EpochLog> logs;
  if (model.config().baseline == BaselineMode::None) {
    auto p1 = trainer.train_phase1(data);
    logs.insert(logs.end(), p1.begin(), p1.end());
  }
  auto p2 = trainer.train_phase2(data, eval_data.empty() ? nullptr : &eval_data);
  logs.insert(logs.end(), p2.begin(), p2.end());

  fs::create_directories(a.out);
  {
    std::ofstream out(fs::path(a.out) / "config.txt", std::ios::binary);
    out << run.echo();
  }
  {
    std::ofstream out(fs::path(a.out) / "epochs.tsv", std::ios::binary);
    write_epoch_logs(out, logs);
  }
  trainer.restore_best();
  const std::string ckpt = (fs::path(a.out) / "model.ckpt").string();
  save_checkpoint(model, vocab, dict, gaz, ckpt);
  std::cout << "checkpoint: " << ckpt << "\n";
  if (!logs.empty() && !std::isnan(logs.back().slot_f1))
    std::cout << "best slot F1: " << std::setprecision(6) << trainer.best_f1()
              << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data;
};

int cmd_eval(const EvalArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const std::vector<Utterance> data = load_dataset(a.data, ckpt.dict);
  const EvalMetrics m =
      evaluate_model(ckpt.model, ckpt.vocab, ckpt.dict, ckpt.gazetteer, data);
  std::cout << std::setprecision(6);
  std::cout << "utterances\t" << data.size() << "\n";
  std::cout << "slot_f1\t" << m.slot_f1 << "\n";
  std::cout << "slot_token_acc\t" << m.slot_token_acc << "\n";
  std::cout << "intent_acc\t" << m.intent_acc << "\n";
  if (ckpt.model.config().baseline == BaselineMode::None)
    std::cout << "info_tag_acc\t" << m.info_acc << "\n";
  std::cout << "repaired_tags\t" << m.repaired_tags << "\n";
  return 0;
}

struct TagArgs {
  std::string checkpoint, utterance;
  std::vector<std::string> userinfo;
};

int cmd_tag(const TagArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  Utterance u;
  for (const auto& tok : detail::split(a.utterance, ' '))
    if (!detail::trim(tok).empty()) u.tokens.push_back(detail::trim(tok));
  if (u.tokens.empty()) throw ArgumentError("tag: empty utterance");
  u.slot_tags.assign(u.tokens.size(), "O");
  for (const auto& spec : a.userinfo) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("tag: --userinfo expects type=content, got \"" + spec + "\"");
    UserInfoEntry e{spec.substr(0, eq), spec.substr(eq + 1)};
    if (!ckpt.dict.has_type(e.info_type))
      throw ArgumentError("tag: unknown user info type \"" + e.info_type + "\"");
    u.user_info.push_back(std::move(e));
  }
  const Prediction p =
      predict(ckpt.model, ckpt.vocab, ckpt.dict, ckpt.gazetteer, u);
  std::size_t width = 5;
  for (const auto& tok : u.tokens) width = std::max(width, tok.size());
  std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "token"
            << std::setw(18) << "info_tag" << "slot_tag\n";
  for (std::size_t t = 0; t < u.tokens.size(); ++t)
    std::cout << std::setw(static_cast<int>(width) + 2) << u.tokens[t]
              << std::setw(18)
              << (p.info_tags.empty() ? std::string("-") : p.info_tags[t])
              << p.slot_tags[t] << "\n";
  std::cout << "intent\t" << p.intent << "\n";
  return 0;
}

struct GradcheckArgs {
  std::string config;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  std::size_t embed_dim = 6, hidden_dim = 5;
  DecoderVariant decoder = DecoderVariant::Feedforward;
  IntentSource intent_source = IntentSource::EncoderFinal;
  if (!a.config.empty()) {
    const RunConfig run = RunConfig::load(a.config);
    embed_dim = run.embed_dim;
    hidden_dim = run.hidden_dim;
    decoder = run.decoder;
    intent_source = run.intent_source;
  }
  std::vector<GradCheckLine> lines = gradcheck_primitives();
  for (auto& l : gradcheck_model(embed_dim, hidden_dim, decoder, intent_source))
    lines.push_back(l);
  for (auto& l : gradcheck_baselines()) lines.push_back(l);

  bool all_ok = true;
  for (const auto& l : lines) {
    std::cout << std::left << std::setw(34) << l.name << std::scientific
              << std::setprecision(3) << l.max_rel_err << "  (tol "
              << l.threshold << ")  " << (l.ok() ? "ok" : "FAIL") << "\n";
    std::cout.unsetf(std::ios::scientific);
    all_ok = all_ok && l.ok();
  }
  if (!all_ok) {
    std::cerr << "gradient check failed\n";
    return 1;
  }
  return 0;
}

struct ExperimentArgs {
  std::string spec;
};

int cmd_experiment(const ExperimentArgs& a) {
  const ExperimentSpec spec = ExperimentSpec::load(a.spec);
  if (spec.kind == ExperimentSpec::Kind::LearningCurve ||
      spec.kind == ExperimentSpec::Kind::Both) {
    const auto cells = run_learning_curve(spec);
    std::size_t failed = 0;
    for (const auto& c : cells)
      if (c.failed) {
        ++failed;
        std::cerr << "cell " << c.variant << "/" << c.size << "/" << c.seed
                  << " failed: " << c.error << "\n";
      }
    std::cout << "learning curve: " << cells.size() - failed << "/" << cells.size()
              << " cells ok, reports in " << spec.out_dir << "\n";
  }
  if (spec.kind == ExperimentSpec::Kind::TrainingTime ||
      spec.kind == ExperimentSpec::Kind::Both) {
    const auto report = run_training_time(spec);
    std::cout << "training time: target F1 " << std::setprecision(6)
              << report.target_f1 << "\n";
    for (const auto& s : report.summaries)
      std::cout << "  " << s.variant << ": best " << s.best_f1 << ", reaches target at epoch "
                << s.epochs_to_target << " of " << s.total_epochs << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"progressive slot filling and intent detection with user-info distillation"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic flight-domain corpus");
  gen_cmd->add_option("--n", gen.n, "number of training utterances")->capture_default_str();
  gen_cmd->add_option("--test-n", gen.test_n, "held-out utterances (0 = none)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--gazetteer", gen.gazetteer, "city TSV path")->required();
  gen_cmd->add_option("--out", gen.out, "output dataset path")->required();
  gen_cmd->add_option("--test-out", gen.test_out, "held-out dataset path");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-userinfo", "attach synthesized user info to a dataset");
  synth_cmd->add_option("--data", synth.data, "input dataset")->required();
  synth_cmd->add_option("--gazetteer", synth.gazetteer, "city TSV path")->required();
  synth_cmd->add_option("--seed", synth.seed, "draw seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output dataset")->required();
  synth_cmd->add_option("--dictionary", synth.dictionary,
                        "user info dictionary (default: built-in loc/periods)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--config", train.config, "key = value run configuration");
  train_cmd->add_option("--data", train.data, "training dataset")->required();
  train_cmd->add_option("--out", train.out, "output directory")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--data", eval.data, "evaluation dataset")->required();

  TagArgs tag;
  auto* tag_cmd = app.add_subcommand("tag", "tag one utterance with a trained checkpoint");
  tag_cmd->add_option("--checkpoint", tag.checkpoint, "model checkpoint")->required();
  tag_cmd->add_option("--utterance", tag.utterance, "space-separated tokens")->required();
  tag_cmd->add_option("--userinfo", tag.userinfo, "user info as type=content (repeatable)");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gc_cmd->add_option("--config", gc.config,
                     "run configuration for model dims (default: small fixture dims)");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "run the learning-curve / training-time matrix");
  exp_cmd->add_option("--spec", exp.spec, "experiment spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_corpus(gen);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (tag_cmd->parsed()) return cmd_tag(tag);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc);
    if (exp_cmd->parsed()) return cmd_experiment(exp);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
