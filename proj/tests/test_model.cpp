#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <set>

#include "progslu/gradcheck.hpp"
#include "progslu/model.hpp"

using namespace progslu;

namespace {

ModelConfig small_config(const GradCheckFixture& f) {
  ModelConfig cfg;
  cfg.vocab_size = f.vocab.num_tokens();
  cfg.embed_dim = 6;
  cfg.hidden_dim = 5;
  cfg.num_info_tags = f.vocab.num_info_tags_iob();
  cfg.num_slot_tags = f.vocab.num_slot_tags_iob();
  cfg.num_intents = f.vocab.num_intents();
  cfg.num_info_types = f.dict.num_types();
  cfg.seed = 33;
  return cfg;
}

void zero_all(ProgModel& m) {
  for (const auto& p : m.parameters())
    std::fill(p.tensor.value().begin(), p.tensor.value().end(), 0.0);
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("model config validation", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ModelConfig cfg = small_config(f);
  CHECK_NOTHROW(ProgModel(cfg));

  ModelConfig bad = cfg;
  bad.hidden_dim = 0;
  CHECK_THROWS_AS(ProgModel(bad), ConfigError);

  bad = cfg;
  bad.num_info_tags = 5;  // not an IOB pairing of the base types
  CHECK_THROWS_AS(ProgModel(bad), ConfigError);

  bad = cfg;
  bad.baseline = BaselineMode::AttBirnn;
  bad.decoder = DecoderVariant::Lstm;
  CHECK_THROWS_AS(ProgModel(bad), ConfigError);
}

TEST_CASE("parameter groups partition the trainables", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  for (DecoderVariant dec : {DecoderVariant::Feedforward, DecoderVariant::Lstm}) {
    ModelConfig cfg = small_config(f);
    cfg.decoder = dec;
    ProgModel model(cfg);
    std::set<std::string> names;
    std::size_t group_total = 0;
    for (const auto& p : model.parameters()) CHECK(names.insert(p.name).second);
    for (ParamGroup g : {ParamGroup::Encoder, ParamGroup::Tagging, ParamGroup::Slot,
                         ParamGroup::Intent, ParamGroup::DistanceScale})
      group_total += model.group_params({g}).size();
    CHECK(group_total == model.parameters().size());
    CHECK(model.param("beta").shape() ==
          ad::Shape{cfg.num_info_types, cfg.normalized().dim_d});
  }
}

TEST_CASE("encode shapes and zero case", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ProgModel model(small_config(f));

  ad::Tape tape;
  auto enc = model.encode(tape, {2});
  REQUIRE(enc.h.size() == 1);
  CHECK(enc.h[0].size() == 2 * model.config().hidden_dim);
  CHECK(enc.h_final.same_storage(enc.h[0]));

  CHECK_THROWS_AS(model.encode(tape, {}), DimensionError);
  CHECK_THROWS_AS(model.encode(tape, {static_cast<int>(f.vocab.num_tokens())}),
                  ArgumentError);

  ProgModel zeros(small_config(f));
  zero_all(zeros);
  ad::Tape t2;
  auto enc0 = zeros.encode(t2, {2, 3, 4});
  for (const auto& h : enc0.h)
    for (double v : h.value()) CHECK(v == 0.0);
}

TEST_CASE("reversed input swaps the encoder directions", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ModelConfig cfg = small_config(f);
  ProgModel fwd_model(cfg);
  ProgModel mirrored(cfg);
  // mirrored gets the forward/backward cells swapped
  for (const char* part : {"w_input", "w_hidden", "bias"}) {
    mirrored.param("encoder.fwd." + std::string(part)).value() =
        fwd_model.param("encoder.bwd." + std::string(part)).value();
    mirrored.param("encoder.bwd." + std::string(part)).value() =
        fwd_model.param("encoder.fwd." + std::string(part)).value();
  }
  mirrored.param("encoder.embedding").value() =
      fwd_model.param("encoder.embedding").value();

  const std::vector<int> ids = {2, 5, 3, 4, 2};
  std::vector<int> reversed(ids.rbegin(), ids.rend());
  ad::Tape t1, t2;
  auto enc = fwd_model.encode(t1, ids);
  auto mirror_enc = mirrored.encode(t2, reversed);

  const std::size_t T = ids.size();
  const std::size_t H = cfg.hidden_dim;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& a = enc.h[t].value();
    const auto& b = mirror_enc.h[T - 1 - t].value();
    // fh of the original run is bh of the mirrored run, and vice versa
    for (std::size_t i = 0; i < H; ++i) {
      CHECK(a[i] == b[H + i]);
      CHECK(a[H + i] == b[i]);
    }
  }
}

TEST_CASE("attention properties", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ProgModel model(small_config(f));
  const std::size_t E2 = model.config().encoder_width();
  Rng rng(3);

  // single element: weight 1, context equals the lone state
  {
    ad::Tape tape;
    ad::Tensor h = ad::Tensor::zeros({E2});
    for (auto& v : h.value()) v = rng.uniform(-1, 1);
    auto att = model.attention_context(tape, {h},
                                       ad::Tensor::zeros({model.config().query_width()}));
    CHECK(att.weights.value() == std::vector<double>{1.0});
    CHECK(att.context.value() == h.value());
  }

  // identical states: uniform weights regardless of the query
  {
    ad::Tape tape;
    ad::Tensor h = ad::Tensor::zeros({E2});
    for (auto& v : h.value()) v = rng.uniform(-1, 1);
    ad::Tensor q = ad::Tensor::zeros({model.config().query_width()});
    for (auto& v : q.value()) v = rng.uniform(-1, 1);
    auto att = model.attention_context(tape, {h, h, h, h, h}, q);
    for (double w : att.weights.value())
      CHECK(std::fabs(w - 0.2) < 1e-9);
  }

  // weights always sum to 1
  for (int rep = 0; rep < 50; ++rep) {
    ad::Tape tape;
    std::vector<ad::Tensor> h(1 + rng.below(7));
    for (auto& hk : h) {
      hk = ad::Tensor::zeros({E2});
      for (auto& v : hk.value()) v = rng.uniform(-2, 2);
    }
    ad::Tensor q = ad::Tensor::zeros({model.config().query_width()});
    for (auto& v : q.value()) v = rng.uniform(-2, 2);
    auto att = model.attention_context(tape, h, q);
    double sum = 0.0;
    for (double w : att.weights.value()) sum += w;
    CHECK(std::fabs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("tagging head distributions", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ProgModel model(small_config(f));
  const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);

  ad::Tape tape;
  auto tagging = model.run_tagging(tape, ids);
  REQUIRE(tagging.p_info.size() == ids.size());
  for (const auto& p : tagging.p_info) {
    CHECK(p.size() == f.vocab.num_info_tags_iob() + 1);
    double sum = 0.0;
    for (double v : p.value()) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }

  ProgModel zeros(small_config(f));
  zero_all(zeros);
  ad::Tape t2;
  auto uniform = zeros.run_tagging(t2, ids);
  const double expect = 1.0 / static_cast<double>(f.vocab.num_info_tags_iob() + 1);
  for (double v : uniform.p_info[0].value())
    CHECK(v == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("compute_phi weighting", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ModelConfig cfg = small_config(f);
  ProgModel model(cfg);
  const std::size_t U = cfg.num_info_tags;
  const std::size_t E2 = cfg.encoder_width();
  const std::size_t dim_d = cfg.normalized().dim_d;

  ad::Tape tape;
  ad::Tensor context = ad::Tensor::zeros({E2});
  Rng rng(9);
  for (auto& v : context.value()) v = rng.uniform(-1, 1);
  std::vector<ad::Tensor> d;
  for (std::size_t j = 0; j < cfg.num_info_types; ++j) {
    d.push_back(ad::Tensor::zeros({dim_d}));
    for (auto& v : d.back().value()) v = rng.uniform(0, 1);
  }

  // one-hot on O: every distance block zeroed, context rides through
  {
    ad::Tensor p = ad::Tensor::zeros({U + 1});
    p.value()[U] = 1.0;
    ad::Tensor phi = model.compute_phi(tape, p, d, context);
    REQUIRE(phi.size() == cfg.phi_width());
    for (std::size_t i = 0; i < U * dim_d; ++i) CHECK(phi.value()[i] == 0.0);
    for (std::size_t i = 0; i < E2; ++i)
      CHECK(phi.value()[U * dim_d + i] == context.value()[i]);
  }

  // one-hot on tag j: block j carries d of its base type, everything else 0
  {
    const std::size_t j = 3;  // I-depart_period
    ad::Tensor p = ad::Tensor::zeros({U + 1});
    p.value()[j] = 1.0;
    ad::Tensor phi = model.compute_phi(tape, p, d, context);
    for (std::size_t b = 0; b < U; ++b)
      for (std::size_t i = 0; i < dim_d; ++i)
        CHECK(phi.value()[b * dim_d + i] == (b == j ? d[j / 2].value()[i] : 0.0));
    for (std::size_t i = 0; i < E2; ++i) CHECK(phi.value()[U * dim_d + i] == 0.0);
  }

  CHECK_THROWS_AS(
      model.compute_phi(tape, ad::Tensor::zeros({U}), d, context),
      DimensionError);
}

TEST_CASE("slot and intent heads normalize", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  for (IntentSource src : {IntentSource::EncoderFinal, IntentSource::SlotStatesMean}) {
    ModelConfig cfg = small_config(f);
    cfg.intent_source = src;
    ProgModel model(cfg);
    const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);

    ad::Tape tape;
    auto fwd = model.forward(tape, ids, f.table);
    REQUIRE(fwd.p_slot.size() == ids.size());
    for (const auto& p : fwd.p_slot) {
      CHECK(p.size() == f.vocab.num_slot_tags_iob() + 1);
      double sum = 0.0;
      for (double v : p.value()) sum += v;
      CHECK(std::fabs(sum - 1.0) < 1e-9);
    }
    double isum = 0.0;
    for (double v : fwd.p_intent.value()) isum += v;
    CHECK(fwd.p_intent.size() == f.vocab.num_intents());
    CHECK(std::fabs(isum - 1.0) < 1e-9);

    ProgModel zeros(cfg);
    zero_all(zeros);
    ad::Tape t2;
    auto fz = zeros.forward(t2, ids, f.table);
    for (double v : fz.p_slot[0].value())
      CHECK(v == Catch::Approx(1.0 / static_cast<double>(f.vocab.num_slot_tags_iob() + 1))
                     .epsilon(1e-12));
    for (double v : fz.p_intent.value())
      CHECK(v == Catch::Approx(1.0 / static_cast<double>(f.vocab.num_intents()))
                     .epsilon(1e-12));
  }
}

TEST_CASE("forward is deterministic and length-consistent", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  for (DecoderVariant dec : {DecoderVariant::Feedforward, DecoderVariant::Lstm}) {
    ModelConfig cfg = small_config(f);
    cfg.decoder = dec;
    ProgModel model(cfg);
    const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);

    ad::Tape t1, t2;
    auto a = model.forward(t1, ids, f.table);
    auto b = model.forward(t2, ids, f.table);
    CHECK(a.tagging.p_info.size() == ids.size());
    CHECK(a.p_slot.size() == ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      CHECK(bitwise_equal(a.p_slot[t].value(), b.p_slot[t].value()));
      CHECK(bitwise_equal(a.tagging.p_info[t].value(), b.tagging.p_info[t].value()));
    }
    CHECK(bitwise_equal(a.p_intent.value(), b.p_intent.value()));
    CHECK(a.slot_predictions == b.slot_predictions);
  }
}

TEST_CASE("mistag fallback: certain O keeps only the context", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  ModelConfig cfg = small_config(f);
  ProgModel model(cfg);
  ad::Tape tape;
  const std::size_t U = cfg.num_info_tags;
  ad::Tensor p = ad::Tensor::zeros({U + 1});
  p.value()[U] = 1.0;
  ad::Tensor context = ad::Tensor::full({cfg.encoder_width()}, 0.75);
  ad::Tensor beta = model.param("beta");
  auto d = distance_features(tape, beta, f.table, 0);
  ad::Tensor phi = model.compute_phi(tape, p, d, context);
  double dist = 0.0;
  for (std::size_t i = 0; i < U * cfg.normalized().dim_d; ++i)
    dist += phi.value()[i] * phi.value()[i];
  for (std::size_t i = 0; i < cfg.encoder_width(); ++i) {
    const double diff = phi.value()[U * cfg.normalized().dim_d + i] - 0.75;
    dist += diff * diff;
  }
  CHECK(std::sqrt(dist) == 0.0);
}

TEST_CASE("baselines", "[model]") {
  GradCheckFixture f = make_gradcheck_fixture();
  const std::vector<int> ids = f.vocab.encode_tokens(f.utterance.tokens);

  ModelConfig prog_cfg = small_config(f);
  ProgModel prog(prog_cfg);
  ad::Tape tp;
  auto prog_out = prog.forward(tp, ids, f.table);
  CHECK_THROWS_AS(prog.baseline_forward(tp, ids), ConfigError);

  ModelConfig cfg = small_config(f);
  cfg.baseline = BaselineMode::AttBirnn;
  ProgModel base(cfg);
  ad::Tape tape;
  auto out = base.baseline_forward(tape, ids);
  REQUIRE(out.p_slot.size() == ids.size());
  CHECK(out.p_slot[0].size() == prog_out.p_slot[0].size());
  CHECK(out.p_intent.size() == prog_out.p_intent.size());
  CHECK_THROWS_AS(base.run_tagging(tape, ids), ConfigError);

  ModelConfig ccfg = small_config(f);
  ccfg.baseline = BaselineMode::AttBirnnConcatInfo;
  ProgModel concat(ccfg);
  const std::vector<double> block = baseline_info_block(f.utterance, f.dict, f.gazetteer);
  REQUIRE(block.size() == f.dict.num_types());
  CHECK(block[0] > 0.0);    // loc span resolved
  CHECK(block[1] == -1.0);  // no depart preference attached
  ad::Tape t2;
  auto cout_ = concat.baseline_forward(t2, ids, block);
  for (const auto& s : cout_.slot_states)
    CHECK(s.size() == 2 * ccfg.encoder_width() + ccfg.num_info_types);
  CHECK_THROWS_AS(concat.baseline_forward(t2, ids, {}), DimensionError);
}

TEST_CASE("full model gradient check", "[model]") {
  for (auto& line : gradcheck_model(5, 4)) {
    INFO(line.name);
    CHECK(line.max_rel_err < 1e-4);
  }
}

TEST_CASE("lstm decoder variant gradient check", "[model]") {
  for (auto& line :
       gradcheck_model(5, 4, DecoderVariant::Lstm, IntentSource::EncoderFinal)) {
    INFO(line.name);
    CHECK(line.max_rel_err < 1e-4);
  }
}

TEST_CASE("slot-states-mean intent gradient check", "[model]") {
  for (auto& line : gradcheck_model(5, 4, DecoderVariant::Feedforward,
                                    IntentSource::SlotStatesMean)) {
    INFO(line.name);
    CHECK(line.max_rel_err < 1e-4);
  }
}

TEST_CASE("baseline gradient checks", "[model]") {
  for (auto& line : gradcheck_baselines()) {
    INFO(line.name);
    CHECK(line.max_rel_err < 1e-4);
  }
}
