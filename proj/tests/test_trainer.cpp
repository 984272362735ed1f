#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "svs/errors.h"
#include "svs/trainer.h"

using namespace svs;

namespace {

AcousticModelConfig tiny_model() {
  AcousticModelConfig cfg;
  cfg.n_encoder_blocks = 1;
  cfg.n_decoder_blocks = 1;
  cfg.hidden = 16;
  cfg.conv_kernel = 3;
  cfg.conv_filter = 32;
  cfg.n_heads = 2;
  cfg.dropout = 0.1;
  cfg.n_mels = 8;
  cfg.duration_buckets = 32;
  return cfg;
}

AcousticTrainSpec tiny_acoustic_spec(int64_t adv_start) {
  AcousticTrainSpec spec;
  spec.steps = 60;
  spec.batch = 2;
  spec.d_model = 16;
  spec.warmup_steps = 10;
  spec.adv_start_step = adv_start;
  spec.window_min_frames = 4;
  spec.window_max_frames = 8;
  spec.checkpoint_every = 10;
  spec.seed = 42;
  return spec;
}

NormStats identity_stats(int64_t n_mels) {
  NormStats s;
  s.mel_mean.assign(static_cast<size_t>(n_mels), 0.0);
  s.mel_std.assign(static_cast<size_t>(n_mels), 1.0);
  s.f0_mean_semitone = 60.0;
  s.f0_std_semitone = 5.0;
  s.voiced_frames = 100;
  return s;
}

AcousticTrainItem make_acoustic_item(const std::string& name, uint64_t seed, int64_t n_ph) {
  Rng rng(seed);
  AcousticTrainItem item;
  item.name = name;
  for (int64_t i = 0; i < n_ph; ++i) {
    item.seq.phoneme_ids.push_back(1 + i % 7);
    item.seq.pitch_ids.push_back(i % 5 == 4 ? kRestPitchId : 57 + i % 8);
    item.seq.duration_frames.push_back(2 + i % 3);
  }
  int64_t T = 0;
  for (int64_t d : item.seq.duration_frames) T += d;
  item.feats.mel = Tensor({T, 8});
  for (int64_t i = 0; i < item.feats.mel.size(); ++i) item.feats.mel[i] = 0.5 * rng.normal();
  item.feats.f0_hz.assign(static_cast<size_t>(T), 0.0);
  item.feats.vuv.assign(static_cast<size_t>(T), 0);
  for (int64_t t = 0; t < T; ++t) {
    if (t % 7 != 0) {
      item.feats.vuv[static_cast<size_t>(t)] = 1;
      item.feats.f0_hz[static_cast<size_t>(t)] = 220.0 + 5.0 * static_cast<double>(t % 4);
    }
  }
  return item;
}

std::vector<AcousticTrainItem> acoustic_corpus() {
  return {make_acoustic_item("utt0", 7, 8), make_acoustic_item("utt1", 8, 10)};
}

VocoderConfig tiny_vocoder() {
  VocoderConfig cfg;
  cfg.n_layers_per_stack = 2;
  cfg.n_stacks = 1;
  cfg.kernel = 3;
  cfg.residual_channels = 3;
  cfg.gate_channels = 6;
  cfg.skip_channels = 3;
  cfg.hop_samples = 12;
  cfg.n_mels = 4;
  cfg.upsample_factors = {3, 4};
  return cfg;
}

VocoderTrainSpec tiny_vocoder_spec(int64_t adv_start) {
  VocoderTrainSpec spec;
  spec.steps = 40;
  spec.batch = 2;
  spec.adv_start_step = adv_start;
  spec.crop_frames = 8;  // 96-sample training excerpts
  spec.crops.lengths_s = {0.001, 0.002};
  spec.crops.sample_rate = 12000.0;  // 12- and 24-sample segments
  spec.stft_resolutions = {{64, 12, 48}, {128, 24, 96}};
  spec.checkpoint_every = 10;
  spec.seed = 9;
  return spec;
}

VocoderTrainItem make_vocoder_item(const std::string& name, uint64_t seed, int64_t T,
                                   const VocoderConfig& cfg) {
  Rng rng(seed);
  VocoderTrainItem item;
  item.name = name;
  item.cond = Tensor({T, cfg.aux_dims()});
  for (int64_t i = 0; i < item.cond.size(); ++i) item.cond[i] = 0.5 * rng.normal();
  for (int64_t t = 0; t < T; ++t)
    item.cond[t * cfg.aux_dims() + cfg.aux_dims() - 1] = (t % 4 == 0) ? 0.0 : 1.0;
  const int64_t L = T * cfg.hop_samples;
  item.samples = Tensor({L, 1});
  for (int64_t i = 0; i < L; ++i)
    item.samples[i] = 0.5 * std::sin(2.0 * M_PI * i / 24.0) + 0.01 * rng.normal();
  return item;
}

std::vector<VocoderTrainItem> vocoder_corpus(const VocoderConfig& cfg) {
  return {make_vocoder_item("w0", 3, 20, cfg), make_vocoder_item("w1", 4, 16, cfg)};
}

std::vector<Tensor> param_values(const ParamStore& ps) {
  std::vector<Tensor> out;
  for (const auto& [name, var] : ps.items()) out.push_back(var->value);
  return out;
}

bool bitwise_equal(const std::vector<Tensor>& a, const ParamStore& ps) {
  if (a.size() != ps.items().size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Tensor& t = ps.items()[i].second->value;
    if (a[i].size() != t.size()) return false;
    if (std::memcmp(a[i].data(), t.data(), static_cast<size_t>(t.size()) * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("vocoder learning rate halves every decay period") {
  VocoderTrainSpec spec;
  CHECK(lr_at_step(spec, 0) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at_step(spec, 199999) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at_step(spec, 200000) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_at_step(spec, 399999) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_at_step(spec, 400000) == doctest::Approx(2.5e-5).epsilon(1e-12));
  CHECK(lr_at_step(spec, 123456) == lr_at_step(spec, 123456));
  CHECK_THROWS_AS(lr_at_step(spec, -1), DomainError);
}

TEST_CASE("warm-up schedule ramps linearly then decays as inverse square root") {
  AcousticTrainSpec spec;  // d_model 384, warmup 4000
  CHECK(lr_at_step(spec, 0) == 0.0);
  for (int64_t s = 1; s < 4000; s += 97) CHECK(lr_at_step(spec, s) < lr_at_step(spec, s + 1));
  const double peak = lr_at_step(spec, 4000);
  CHECK(peak == doctest::Approx(std::pow(384.0, -0.5) * std::pow(4000.0, -0.5)).epsilon(1e-12));
  for (int64_t s = 4000; s < 20000; s += 997) CHECK(lr_at_step(spec, s) > lr_at_step(spec, s + 1));
  CHECK(lr_at_step(spec, 16000) == doctest::Approx(peak / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at_step(spec, -3), DomainError);
}

TEST_CASE("adversarial gate opens exactly at the configured step") {
  CHECK_FALSE(adversarial_gate(10000, 9999));
  CHECK(adversarial_gate(10000, 10000));
  CHECK_FALSE(adversarial_gate(100000, 99999));
  CHECK(adversarial_gate(100000, 100000));
  CHECK(adversarial_gate(0, 0));
}

TEST_CASE("adam minimizes a quadratic and corrects bias on the first step") {
  ParamStore ps;
  Var x = ps.create("x", Tensor::scalar(0.0));
  Adam opt(ps.vars(), AdamConfig{});

  ps.zero_grads();
  Var loss = square(add_const(x, -3.0));
  backward(loss);
  opt.step(0.1);
  // First step: both moment estimates are exactly the gradient, so the
  // update is lr * g / (|g| + eps), i.e. almost exactly lr backwards.
  CHECK(x->value[0] == doctest::Approx(0.1).epsilon(1e-6));

  for (int i = 0; i < 300; ++i) {
    ps.zero_grads();
    backward(square(add_const(x, -3.0)));
    opt.step(0.1);
  }
  CHECK(x->value[0] == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(opt.steps_taken() == 301);
}

TEST_CASE("rectified adam starts as momentum sgd then turns adaptive") {
  ParamStore ps;
  Var x = ps.create("x", Tensor::scalar(0.0));
  RAdam opt(ps.vars(), RAdamConfig{});
  auto one_step = [&](double lr) {
    ps.zero_grads();
    backward(x);  // constant gradient of exactly 1
    opt.step(lr);
  };
  // With rho below threshold the bias-corrected momentum of a constant unit
  // gradient is exactly 1, so each early step moves by exactly lr.
  one_step(0.01);
  CHECK(x->value[0] == doctest::Approx(-0.01).epsilon(1e-12));
  one_step(0.01);
  one_step(0.01);
  one_step(0.01);
  CHECK(x->value[0] == doctest::Approx(-0.04).epsilon(1e-12));
  // Step 5 crosses the tractability threshold (rho_5 ~ 4.99 > 4);
  // rectification shrinks the move below lr.
  one_step(0.01);
  CHECK(x->value[0] > -0.05);
  CHECK(x->value[0] < -0.04);
}

TEST_CASE("global norm clip rescales gradients only above the bound") {
  ParamStore ps;
  Var a = ps.create("a", Tensor::scalar(0.0));
  Var b = ps.create("b", Tensor::scalar(0.0));
  a->ensure_grad()[0] = 3.0;
  b->ensure_grad()[0] = 4.0;
  CHECK(clip_global_norm(ps.vars(), 1.0) == doctest::Approx(5.0));
  CHECK(a->grad[0] == doctest::Approx(0.6));
  CHECK(b->grad[0] == doctest::Approx(0.8));
  CHECK(clip_global_norm(ps.vars(), 10.0) == doctest::Approx(1.0));
  CHECK(a->grad[0] == doctest::Approx(0.6));
  CHECK_THROWS_AS(clip_global_norm(ps.vars(), 0.0), ConfigError);
}

TEST_CASE("corpus validation names the offending utterance") {
  AcousticTrainItem item = make_acoustic_item("utt7", 1, 6);
  validate_acoustic_item(item);
  item.seq.duration_frames[0] += 1;  // durations no longer cover the features
  try {
    validate_acoustic_item(item);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("utt7") != std::string::npos);
  }

  VocoderConfig vcfg = tiny_vocoder();
  VocoderTrainItem w = make_vocoder_item("wav3", 2, 10, vcfg);
  validate_vocoder_item(w, vcfg.hop_samples, vcfg.aux_dims());
  VocoderTrainItem bad = w;
  bad.samples = Tensor({bad.samples.rows() - 1, 1});
  try {
    validate_vocoder_item(bad, vcfg.hop_samples, vcfg.aux_dims());
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("wav3") != std::string::npos);
  }
}

TEST_CASE("acoustic training is deterministic under a fixed seed") {
  auto corpus = acoustic_corpus();
  AcousticTrainer a(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  AcousticTrainer b(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  for (int s = 0; s < 10; ++s) {
    TrainMetrics ma = a.step(corpus);
    TrainMetrics mb = b.step(corpus);
    CHECK(ma.total == mb.total);
    CHECK(ma.adv_d == mb.adv_d);
    CHECK(ma.grad_norm == mb.grad_norm);
  }
}

TEST_CASE("discriminators stay bitwise frozen until the gate opens") {
  auto corpus = acoustic_corpus();
  AcousticTrainer t(tiny_model(), 8, tiny_acoustic_spec(50), identity_stats(8));
  std::vector<Tensor> d0 = param_values(t.discriminator_params());
  std::vector<Tensor> g0 = param_values(t.generator_params());
  for (int s = 0; s < 6; ++s) {
    TrainMetrics m = t.step(corpus);
    CHECK_FALSE(m.gate_on);
    CHECK(m.adv_g == 0.0);
    CHECK(m.adv_d == 0.0);
    CHECK(m.disc_grad_norm == 0.0);
  }
  CHECK(bitwise_equal(d0, t.discriminator_params()));
  CHECK_FALSE(bitwise_equal(g0, t.generator_params()));

  AcousticTrainer gated(tiny_model(), 8, tiny_acoustic_spec(3), identity_stats(8));
  std::vector<Tensor> d1 = param_values(gated.discriminator_params());
  TrainMetrics m;
  for (int s = 0; s < 4; ++s) m = gated.step(corpus);
  CHECK(m.gate_on);
  CHECK(m.adv_g != 0.0);
  CHECK_FALSE(bitwise_equal(d1, gated.discriminator_params()));
}

TEST_CASE("moving the gate later leaves the pre-gate trajectory untouched") {
  auto corpus = acoustic_corpus();
  AcousticTrainer early(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  AcousticTrainer late(tiny_model(), 8, tiny_acoustic_spec(7), identity_stats(8));
  std::vector<double> te, tl;
  for (int s = 0; s < 8; ++s) {
    te.push_back(early.step(corpus).total);
    tl.push_back(late.step(corpus).total);
  }
  for (int s = 0; s < 5; ++s) CHECK(te[static_cast<size_t>(s)] == tl[static_cast<size_t>(s)]);
  bool diverged = false;
  for (int s = 5; s < 8; ++s) diverged = diverged || te[static_cast<size_t>(s)] != tl[static_cast<size_t>(s)];
  CHECK(diverged);
}

TEST_CASE("acoustic checkpoint resume continues the exact trajectory") {
  auto corpus = acoustic_corpus();
  const std::string path = "acoustic_resume.ckpt";
  AcousticTrainer full(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  AcousticTrainer half(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  std::vector<double> straight;
  for (int s = 0; s < 14; ++s) straight.push_back(full.step(corpus).total);
  for (int s = 0; s < 10; ++s) half.step(corpus);
  half.save(path);

  AcousticTrainer resumed(tiny_model(), 8, tiny_acoustic_spec(5), identity_stats(8));
  resumed.load(path);
  CHECK(resumed.steps_done() == 10);
  for (int s = 10; s < 14; ++s) {
    double got = resumed.step(corpus).total;
    CHECK(std::abs(got - straight[static_cast<size_t>(s)]) <= 1e-12);
  }

  AcousticTrainSpec other = tiny_acoustic_spec(5);
  other.lambda_adv = 2.0;
  AcousticTrainer wrong(tiny_model(), 8, other, identity_stats(8));
  CHECK_THROWS_AS(wrong.load(path), DataError);
  CHECK_THROWS_AS(resumed.load("no_such_file.ckpt"), IoError);
  std::remove(path.c_str());
}

TEST_CASE("vocoder training is deterministic and honors its gate") {
  VocoderConfig vcfg = tiny_vocoder();
  auto corpus = vocoder_corpus(vcfg);
  VocoderTrainer a(vcfg, tiny_vocoder_spec(3));
  VocoderTrainer b(vcfg, tiny_vocoder_spec(3));
  std::vector<Tensor> d0 = param_values(a.discriminator_params());
  for (int s = 0; s < 6; ++s) {
    TrainMetrics ma = a.step(corpus);
    TrainMetrics mb = b.step(corpus);
    CHECK(ma.total == mb.total);
    CHECK(ma.stft == mb.stft);
    if (s < 3) {
      CHECK_FALSE(ma.gate_on);
      CHECK(ma.adv_g == 0.0);
      CHECK(ma.adv_d == 0.0);
      CHECK(ma.total == doctest::Approx(ma.stft).epsilon(1e-12));
    } else {
      CHECK(ma.gate_on);
    }
  }
  CHECK_FALSE(bitwise_equal(d0, a.discriminator_params()));

  VocoderTrainer cold(vcfg, tiny_vocoder_spec(30));
  std::vector<Tensor> dc = param_values(cold.discriminator_params());
  for (int s = 0; s < 4; ++s) cold.step(corpus);
  CHECK(bitwise_equal(dc, cold.discriminator_params()));
}

TEST_CASE("vocoder checkpoint resume continues the exact trajectory") {
  VocoderConfig vcfg = tiny_vocoder();
  auto corpus = vocoder_corpus(vcfg);
  const std::string path = "vocoder_resume.ckpt";
  VocoderTrainer full(vcfg, tiny_vocoder_spec(3));
  VocoderTrainer half(vcfg, tiny_vocoder_spec(3));
  std::vector<double> straight;
  for (int s = 0; s < 8; ++s) straight.push_back(full.step(corpus).total);
  for (int s = 0; s < 5; ++s) half.step(corpus);
  half.save(path);

  VocoderTrainer resumed(vcfg, tiny_vocoder_spec(3));
  resumed.load(path);
  CHECK(resumed.steps_done() == 5);
  for (int s = 5; s < 8; ++s) {
    double got = resumed.step(corpus).total;
    CHECK(std::abs(got - straight[static_cast<size_t>(s)]) <= 1e-12);
  }
  std::remove(path.c_str());
}

TEST_CASE("metrics serialize to one json object per line") {
  TrainMetrics m;
  m.step = 17;
  m.lr = 2.5e-4;
  m.total = 1.25;
  m.gate_on = true;
  std::string line = metrics_json_line(m);
  CHECK(line.find('\n') == std::string::npos);
  nlohmann::json j = nlohmann::json::parse(line);
  CHECK(j.at("step").get<int64_t>() == 17);
  CHECK(j.at("lr").get<double>() == doctest::Approx(2.5e-4));
  CHECK(j.at("total").get<double>() == doctest::Approx(1.25));
  CHECK(j.at("gate").get<bool>());
}

TEST_CASE("duration head overfits a small corpus") {
  auto corpus = acoustic_corpus();
  AcousticTrainSpec spec = tiny_acoustic_spec(400);
  spec.steps = 500;
  spec.warmup_steps = 50;
  spec.adv_start_step = 499;
  AcousticTrainer t(tiny_model(), 8, spec, identity_stats(8));
  for (int s = 0; s < 500; ++s) t.step(corpus);

  int64_t correct = 0, total = 0;
  for (const AcousticTrainItem& item : corpus) {
    Rng eval(0);
    Var hidden = t.model().encode(item.seq, false, eval);
    Var dur_log = t.model().predict_durations(hidden, false, eval);
    std::vector<int64_t> pred = durations_from_log(dur_log->value);
    for (size_t i = 0; i < pred.size(); ++i) {
      total += 1;
      if (pred[i] == item.seq.duration_frames[i]) correct += 1;
    }
  }
  CHECK(static_cast<double>(correct) >= 0.9 * static_cast<double>(total));
}
