#pragma once

// Finite-difference verification entry points: every primitive op on random
// shapes, and the full model loss on a small fixture utterance carrying one
// location span and one time span.

#include <string>
#include <vector>

#include "progslu/autodiff.hpp"
#include "progslu/corpus.hpp"
#include "progslu/distill.hpp"
#include "progslu/model.hpp"
#include "progslu/training.hpp"

namespace progslu {

struct GradCheckLine {
  std::string name;
  double max_rel_err = 0.0;
  double threshold = 0.0;
  bool ok() const { return max_rel_err < threshold; }
};

inline constexpr double kPrimitiveGradTol = 1e-6;
inline constexpr double kModelGradTol = 1e-4;

namespace detail {

inline ad::Tensor rand_t(ad::Shape shape, Rng& rng) {
  ad::Tensor t = ad::Tensor::zeros(std::move(shape), true);
  for (auto& v : t.value()) v = rng.uniform(-1.2, 1.2);
  return t;
}

}  // namespace detail

// One grad_check line per primitive, random shapes with dims 1..8.
inline std::vector<GradCheckLine> gradcheck_primitives(std::uint64_t seed = 20240901) {
  Rng rng(seed);
  auto dim = [&]() { return 1 + rng.below(8); };
  std::vector<GradCheckLine> lines;
  auto check = [&](const std::string& name, double tol,
                   const std::function<ad::Tensor(ad::Tape&)>& loss,
                   const std::vector<ad::NamedParam>& params) {
    lines.push_back({name, ad::grad_check(loss, params).max_rel_err, tol});
  };

  {
    const std::size_t m = dim(), k = dim(), n = dim();
    ad::Tensor a = detail::rand_t({m, k}, rng), b = detail::rand_t({k, n}, rng);
    check("matmul", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::matmul(t, a, b)); },
          {{"a", a}, {"b", b}});
    ad::Tensor x = detail::rand_t({k}, rng);
    check("matmul_vec", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::matmul(t, a, x)); },
          {{"a", a}, {"x", x}});
  }
  {
    ad::Tensor a = detail::rand_t({dim()}, rng), b = detail::rand_t({dim()}, rng);
    check("concat", kPrimitiveGradTol,
          [&](ad::Tape& t) {
            ad::Tensor c = ad::concat(t, {a, b});
            return ad::sum(t, ad::mul(t, c, c));
          },
          {{"a", a}, {"b", b}});
  }
  {
    ad::Tensor x = detail::rand_t({2 + rng.below(6)}, rng);
    check("softmax", kPrimitiveGradTol,
          [&](ad::Tape& t) {
            return ad::cross_entropy(t, ad::softmax(t, x), 0);
          },
          {{"x", x}});
    check("sigmoid", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::sigmoid(t, x)); }, {{"x", x}});
    check("tanh", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::tanh(t, x)); }, {{"x", x}});
    check("scalar_mul", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::scalar_mul(t, -1.7, x)); },
          {{"x", x}});
  }
  {
    const std::size_t n = dim();
    ad::Tensor a = detail::rand_t({n}, rng), b = detail::rand_t({n}, rng);
    check("elementwise_add", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::tanh(t, ad::add(t, a, b))); },
          {{"a", a}, {"b", b}});
    check("elementwise_mul", kPrimitiveGradTol,
          [&](ad::Tape& t) { return ad::sum(t, ad::mul(t, a, b)); },
          {{"a", a}, {"b", b}});
  }
  {
    ad::Tensor x = detail::rand_t({5}, rng);
    ad::Tensor m = detail::rand_t({3 + rng.below(5), 4}, rng);
    ad::Tensor s = detail::rand_t({1}, rng);
    check("gather_slice_row_scale", kPrimitiveGradTol,
          [&](ad::Tape& t) {
            ad::Tensor picked = ad::gather(t, x, 3);
            ad::Tensor r = ad::row(t, m, 1);
            ad::Tensor sl = ad::slice(t, x, 1, 3);
            return ad::add(t, ad::sum(t, ad::scale(t, picked, r)),
                           ad::sum(t, ad::scale(t, s, sl)));
          },
          {{"x", x}, {"m", m}, {"s", s}});
  }
  {
    ad::Tensor logits = detail::rand_t({4 + rng.below(4)}, rng);
    check("cross_entropy", kPrimitiveGradTol,
          [&](ad::Tape& t) {
            return ad::cross_entropy(t, ad::softmax(t, logits), 1);
          },
          {{"logits", logits}});
  }
  {
    const std::size_t in = dim(), H = dim();
    ad::LstmParams cell = ad::make_lstm(in, H, rng);
    ad::Tensor x = detail::rand_t({in}, rng);
    ad::Tensor h0 = detail::rand_t({H}, rng);
    ad::Tensor c0 = detail::rand_t({H}, rng);
    check("lstm_step", kModelGradTol,
          [&](ad::Tape& t) {
            auto st = ad::lstm_step(t, x, h0, c0, cell);
            return ad::add(t, ad::sum(t, st.h), ad::sum(t, st.c));
          },
          {{"w_input", cell.w_input},
           {"w_hidden", cell.w_hidden},
           {"bias", cell.bias}});
  }
  return lines;
}

// Fixture: "dallas to boston 1110" with a fromloc span, a toloc span, and a
// clock-time span, plus user info for both distance kinds.
struct GradCheckFixture {
  UserInfoDictionary dict;
  Gazetteer gazetteer;
  Vocab vocab;
  Utterance utterance;
  PriorDistanceTable table;
};

inline GradCheckFixture make_gradcheck_fixture() {
  GradCheckFixture f;
  f.dict = UserInfoDictionary::from_entries(
      {{"loc", {DistanceKind::Geo, {"fromloc", "toloc", "stoploc"}}},
       {"depart_period", {DistanceKind::Time, {"depart_time"}}},
       {"arrive_period", {DistanceKind::Time, {"arrive_time"}}}});
  f.gazetteer = Gazetteer::from_cities({
      {"Dallas,TX", 32.7767, -96.7970},
      {"Fort Worth,TX", 32.7555, -97.3308},
      {"Boston,MA", 42.3601, -71.0589},
  });
  f.utterance.tokens = {"dallas", "to", "boston", "1110"};
  f.utterance.slot_tags = {"B-fromloc.city_name", "O", "B-toloc.city_name",
                           "B-arrive_time.time"};
  f.utterance.intent = "atis_flight";
  f.utterance.user_info = {{"loc", "Fort Worth,TX"}, {"arrive_period", "morning"}};
  f.utterance.info_tags = derive_info_sequence(f.utterance, f.dict);

  Utterance filler;  // widens the intent and slot vocabularies a little
  filler.tokens = {"ground", "transportation", "in", "denver", "please"};
  filler.slot_tags = {"O", "O", "O", "B-city_name", "O"};
  filler.intent = "atis_ground_service";
  filler.info_tags = derive_info_sequence(filler, f.dict);
  Utterance filler2;
  filler2.tokens = {"cheapest", "fare", "to", "boston"};
  filler2.slot_tags = {"B-cost_relative", "O", "O", "B-toloc.city_name"};
  filler2.intent = "atis_airfare";
  filler2.info_tags = derive_info_sequence(filler2, f.dict);

  f.vocab = Vocab::build({f.utterance, filler, filler2}, f.dict);
  f.table = compute_delta(f.utterance, merge_spans(f.utterance.info_tags),
                          f.utterance.user_info, f.dict, f.gazetteer);
  return f;
}

// Max relative error per parameter group for the full objective
// L_u + L_s + L_I on the fixture utterance.
inline std::vector<GradCheckLine> gradcheck_model(
    std::size_t embed_dim = 6, std::size_t hidden_dim = 5,
    DecoderVariant decoder = DecoderVariant::Feedforward,
    IntentSource intent_source = IntentSource::EncoderFinal,
    std::uint64_t seed = 7) {
  const GradCheckFixture f = make_gradcheck_fixture();
  ModelConfig cfg;
  cfg.vocab_size = f.vocab.num_tokens();
  cfg.embed_dim = embed_dim;
  cfg.hidden_dim = hidden_dim;
  cfg.num_info_tags = f.vocab.num_info_tags_iob();
  cfg.num_slot_tags = f.vocab.num_slot_tags_iob();
  cfg.num_intents = f.vocab.num_intents();
  cfg.num_info_types = f.dict.num_types();
  cfg.decoder = decoder;
  cfg.intent_source = intent_source;
  cfg.seed = seed;
  ProgModel model(cfg);

  const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);
  const std::vector<int> gold_info = gold_info_ids(f.utterance, f.vocab);
  const std::vector<int> gold_slot = gold_slot_ids(f.utterance, f.vocab);
  const int gold_intent = f.vocab.intent_id(f.utterance.intent);

  auto loss = [&](ad::Tape& tape) {
    auto fwd = model.forward(tape, ids, f.table);
    ad::Tensor l = loss_userinfo(tape, fwd.tagging.p_info, gold_info);
    l = ad::add(tape, l, loss_slot(tape, fwd.p_slot, gold_slot));
    return ad::add(tape, l, loss_intent(tape, fwd.p_intent, gold_intent));
  };
  const auto report = ad::grad_check(loss, model.all_params());

  std::vector<GradCheckLine> lines;
  for (ParamGroup g : {ParamGroup::Encoder, ParamGroup::Tagging, ParamGroup::Slot,
                       ParamGroup::Intent, ParamGroup::DistanceScale}) {
    GradCheckLine line{std::string("model group ") + param_group_name(g), 0.0,
                       kModelGradTol};
    for (const auto& [name, err] : report.per_param)
      for (const auto& p : model.parameters())
        if (p.name == name && p.group == g) line.max_rel_err = std::max(line.max_rel_err, err);
    lines.push_back(line);
  }
  return lines;
}

// Same check for the two baselines.
inline std::vector<GradCheckLine> gradcheck_baselines(std::uint64_t seed = 7) {
  const GradCheckFixture f = make_gradcheck_fixture();
  std::vector<GradCheckLine> lines;
  for (BaselineMode mode : {BaselineMode::AttBirnn, BaselineMode::AttBirnnConcatInfo}) {
    ModelConfig cfg;
    cfg.vocab_size = f.vocab.num_tokens();
    cfg.embed_dim = 6;
    cfg.hidden_dim = 5;
    cfg.num_info_tags = f.vocab.num_info_tags_iob();
    cfg.num_slot_tags = f.vocab.num_slot_tags_iob();
    cfg.num_intents = f.vocab.num_intents();
    cfg.num_info_types = f.dict.num_types();
    cfg.baseline = mode;
    cfg.seed = seed;
    ProgModel model(cfg);
    const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);
    const std::vector<int> gold_slot = gold_slot_ids(f.utterance, f.vocab);
    const int gold_intent = f.vocab.intent_id(f.utterance.intent);
    const std::vector<double> block =
        mode == BaselineMode::AttBirnnConcatInfo
            ? baseline_info_block(f.utterance, f.dict, f.gazetteer)
            : std::vector<double>{};
    auto loss = [&](ad::Tape& tape) {
      auto fwd = model.baseline_forward(tape, ids, block);
      return ad::add(tape, loss_slot(tape, fwd.p_slot, gold_slot),
                     loss_intent(tape, fwd.p_intent, gold_intent));
    };
    const auto report = ad::grad_check(loss, model.all_params());
    lines.push_back({std::string("baseline ") + detail::baseline_name(mode),
                     report.max_rel_err, kModelGradTol});
  }
  return lines;
}

}  // namespace progslu
