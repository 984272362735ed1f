#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "svs/errors.h"
#include "svs/vocoder.h"

using namespace svs;

namespace {

// Small enough to run dozens of forwards per test, large enough to exercise
// every structural element (multiple stacks, gating split, both cond paths).
VocoderConfig tiny_config() {
  VocoderConfig cfg;
  cfg.n_layers_per_stack = 3;
  cfg.n_stacks = 2;
  cfg.kernel = 3;
  cfg.residual_channels = 4;
  cfg.gate_channels = 8;
  cfg.skip_channels = 4;
  cfg.hop_samples = 12;
  cfg.n_mels = 4;
  cfg.upsample_factors = {3, 4};
  return cfg;
}

Tensor random_mat(int64_t rows, int64_t cols, Rng& rng, double amp = 0.3) {
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = amp * rng.normal();
  return t;
}

Tensor random_cond(int64_t rows, int64_t aux, Rng& rng) {
  Tensor t = random_mat(rows, aux, rng);
  for (int64_t r = 0; r < rows; ++r) t[r * aux + aux - 1] = (r % 3 == 0) ? 0.0 : 1.0;
  return t;
}

double semitone(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }

}  // namespace

TEST_CASE("receptive field matches the closed form for known schedules") {
  VocoderConfig cfg;  // defaults: 3 stacks x 10 layers, kernel 13
  cfg.validate();
  CHECK(cfg.aux_dims() == 82);
  std::vector<int64_t> d = cfg.dilations();
  REQUIRE(d.size() == 10);
  CHECK(d.front() == 1);
  for (size_t l = 1; l < d.size(); ++l) CHECK(d[l] == 2 * d[l - 1]);
  CHECK(cfg.receptive_field() == 36829);

  VocoderConfig k9 = cfg;
  k9.kernel = 9;
  CHECK(k9.receptive_field() == 24553);

  VocoderConfig one;
  one.n_layers_per_stack = 1;
  one.n_stacks = 1;
  one.kernel = 3;
  CHECK(one.receptive_field() == 3);
}

TEST_CASE("config validation rejects broken geometry") {
  VocoderConfig cfg = tiny_config();
  cfg.validate();

  VocoderConfig even = cfg;
  even.kernel = 4;
  CHECK_THROWS_AS(even.validate(), ConfigError);

  VocoderConfig gate = cfg;
  gate.gate_channels = 7;
  CHECK_THROWS_AS(gate.validate(), ConfigError);

  VocoderConfig factors = cfg;
  factors.upsample_factors = {3, 5};
  CHECK_THROWS_AS(factors.validate(), ConfigError);

  VocoderConfig none = cfg;
  none.upsample_factors.clear();
  CHECK_THROWS_AS(none.validate(), ConfigError);

  VocoderConfig zero = cfg;
  zero.upsample_factors = {0, 12};
  CHECK_THROWS_AS(zero.validate(), ConfigError);
}

TEST_CASE("conditioning stacks normalized mel, pitch, and voicing per frame") {
  AcousticFeatures f;
  f.mel = Tensor::from_vector({4, 3}, {1, 2, 3, 3, 6, 11, 1, 2, 3, 5, 10, 19});
  f.f0_hz = {220.0, 0.0, 440.0, 0.0};
  f.vuv = {1, 0, 1, 0};
  NormStats stats;
  stats.mel_mean = {1, 2, 3};
  stats.mel_std = {2, 4, 8};
  stats.f0_mean_semitone = 55.0;
  stats.f0_std_semitone = 2.0;
  stats.voiced_frames = 2;

  Tensor cond = build_conditioning(f, stats);
  REQUIRE(cond.rows() == 4);
  REQUIRE(cond.cols() == 5);
  validate_conditioning(cond, 3);

  // Mel columns are z-scored per bin.
  CHECK(cond[0] == doctest::Approx(0.0));
  CHECK(cond[5] == doctest::Approx(1.0));
  CHECK(cond[6] == doctest::Approx(1.0));
  CHECK(cond[7] == doctest::Approx(1.0));
  CHECK(cond[15] == doctest::Approx(2.0));
  CHECK(cond[17] == doctest::Approx(2.0));

  // Pitch column: semitone z-score on voiced frames, exact zero elsewhere.
  CHECK(cond[3] == doctest::Approx((semitone(220.0) - 55.0) / 2.0));
  CHECK(cond[13] == doctest::Approx((semitone(440.0) - 55.0) / 2.0));
  CHECK(cond[8] == 0.0);
  CHECK(cond[18] == 0.0);

  // Voicing column copies the flag.
  CHECK(cond[4] == 1.0);
  CHECK(cond[9] == 0.0);
  CHECK(cond[14] == 1.0);
  CHECK(cond[19] == 0.0);

  Tensor half_voiced = cond;
  half_voiced[4] = 0.5;
  CHECK_THROWS_AS(validate_conditioning(half_voiced, 3), DataError);
  Tensor poisoned = cond;
  poisoned[0] = std::nan("");
  CHECK_THROWS_AS(validate_conditioning(poisoned, 3), DataError);
  CHECK_THROWS_AS(validate_conditioning(cond, 4), ContractError);

  f.f0_hz.pop_back();
  CHECK_THROWS_AS(build_conditioning(f, stats), ContractError);
}

TEST_CASE("upsampler emits exactly hop samples per frame") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(11);
  ConditioningUpsampler up(ps, "up", cfg, rng);
  for (int64_t T : {int64_t{1}, int64_t{2}, int64_t{3}, int64_t{7}, int64_t{50}, int64_t{100}}) {
    Rng data(100 + T);
    Var cond = make_constant(random_cond(T, cfg.aux_dims(), data));
    Var out = up.upsample(cond);
    CHECK(out->value.rows() == T * cfg.hop_samples);
    CHECK(out->value.cols() == cfg.aux_dims());
  }

  VocoderConfig big = tiny_config();
  big.hop_samples = 240;
  big.upsample_factors = {4, 4, 15};
  ParamStore ps2;
  ConditioningUpsampler up2(ps2, "up", big, rng);
  Rng data(7);
  Var out = up2.upsample(make_constant(random_cond(9, big.aux_dims(), data)));
  CHECK(out->value.rows() == 9 * 240);
}

TEST_CASE("voicing flag is repeated, not interpolated, across each frame") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(12);
  ConditioningUpsampler up(ps, "up", cfg, rng);
  const int64_t T = 6;
  Rng data(13);
  Tensor cond = random_cond(T, cfg.aux_dims(), data);
  std::vector<double> flags = {1, 0, 0, 1, 1, 0};
  for (int64_t t = 0; t < T; ++t) cond[t * cfg.aux_dims() + cfg.aux_dims() - 1] = flags[static_cast<size_t>(t)];
  Var out = up.upsample(make_constant(cond));
  const int64_t aux = cfg.aux_dims();
  for (int64_t i = 0; i < T * cfg.hop_samples; ++i) {
    double v = out->value[i * aux + aux - 1];
    CHECK(v == flags[static_cast<size_t>(i / cfg.hop_samples)]);
  }
}

TEST_CASE("generator output is bounded, length-preserving, and deterministic") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(21);
  VocoderGenerator gen(cfg, ps, rng);
  const int64_t L = 48;
  Rng data(22);
  Tensor noise = random_mat(L, 1, data, 1.0);
  Tensor cond = random_cond(L, cfg.aux_dims(), data);

  Var a = gen.forward(make_constant(noise), make_constant(cond));
  Var b = gen.forward(make_constant(noise), make_constant(cond));
  REQUIRE(a->value.rows() == L);
  REQUIRE(a->value.cols() == 1);
  for (int64_t i = 0; i < L; ++i) {
    CHECK(a->value[i] > -1.0);
    CHECK(a->value[i] < 1.0);
  }
  CHECK(std::memcmp(a->value.data(), b->value.data(), static_cast<size_t>(L) * sizeof(double)) ==
        0);

  CHECK_THROWS_AS(gen.forward(make_constant(random_mat(L, 2, data)), make_constant(cond)),
                  ContractError);
  CHECK_THROWS_AS(gen.forward(make_constant(noise), make_constant(random_mat(L, 3, data))),
                  ContractError);
  CHECK_THROWS_AS(
      gen.forward(make_constant(noise), make_constant(random_cond(L - 1, cfg.aux_dims(), data))),
      ContractError);
}

TEST_CASE("parameter inventory follows the stack layout") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(31);
  VocoderGenerator gen(cfg, ps, rng);
  // input + 4 convs per layer + 2 post convs, each with weight and bias.
  const int64_t n_layers = cfg.n_stacks * cfg.n_layers_per_stack;
  CHECK(static_cast<int64_t>(ps.items().size()) == 2 * (1 + 4 * n_layers + 2));
  Var dil = ps.find("voc.s1l2.dil.w");
  REQUIRE(dil != nullptr);
  CHECK(dil->value.shape() == std::vector<int64_t>{8, 4, 3});
  Var cond = ps.find("voc.s0l0.cond.w");
  REQUIRE(cond != nullptr);
  CHECK(cond->value.shape() == std::vector<int64_t>{8, 6, 1});
  Var post = ps.find("voc.post2.w");
  REQUIRE(post != nullptr);
  CHECK(post->value.shape() == std::vector<int64_t>{1, 4, 1});
}

TEST_CASE("a noise perturbation reaches exactly the receptive field") {
  VocoderConfig cfg = tiny_config();
  cfg.n_stacks = 1;  // dilations 1,2,4 with kernel 3: field = 1 + 2*7 = 15
  ParamStore ps;
  Rng rng(41);
  VocoderGenerator gen(cfg, ps, rng);
  REQUIRE(gen.receptive_field() == 15);

  const int64_t L = 61, center = 30, reach = (15 - 1) / 2;
  Rng data(42);
  Tensor noise = random_mat(L, 1, data, 1.0);
  Tensor cond = random_cond(L, cfg.aux_dims(), data);
  Tensor base = gen.forward(make_constant(noise), make_constant(cond))->value;

  Tensor bumped = noise;
  bumped[center] += 0.75;
  Tensor pert = gen.forward(make_constant(bumped), make_constant(cond))->value;

  int64_t first = -1, last = -1;
  for (int64_t i = 0; i < L; ++i) {
    if (pert[i] != base[i]) {
      if (first < 0) first = i;
      last = i;
    }
  }
  CHECK(first == center - reach);
  CHECK(last == center + reach);

  // Conditioning enters after each layer's dilated convolution, so its
  // influence must stay inside the same field.
  Tensor cond_bumped = cond;
  cond_bumped[center * cfg.aux_dims()] += 0.75;
  Tensor pert_c = gen.forward(make_constant(noise), make_constant(cond_bumped))->value;
  for (int64_t i = 0; i < L; ++i) {
    if (i < center - reach || i > center + reach) CHECK(pert_c[i] == base[i]);
  }
}

TEST_CASE("symmetric kernels make the generator commute with time reversal") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(51);
  VocoderGenerator gen(cfg, ps, rng);
  for (const auto& [name, var] : ps.items()) {
    if (name.size() < 6 || name.substr(name.size() - 6) != ".dil.w") continue;
    Tensor& w = var->value;
    const int64_t k = w.shape()[2];
    const int64_t planes = w.size() / k;
    for (int64_t p = 0; p < planes; ++p)
      for (int64_t j = 0; j < k / 2; ++j) {
        double m = 0.5 * (w[p * k + j] + w[p * k + (k - 1 - j)]);
        w[p * k + j] = m;
        w[p * k + (k - 1 - j)] = m;
      }
  }

  const int64_t L = 60;
  Rng data(52);
  Tensor noise = random_mat(L, 1, data, 1.0);
  Tensor cond = random_cond(L, cfg.aux_dims(), data);
  Tensor noise_rev({L, 1});
  Tensor cond_rev({L, cfg.aux_dims()});
  for (int64_t i = 0; i < L; ++i) {
    noise_rev[i] = noise[L - 1 - i];
    for (int64_t c = 0; c < cfg.aux_dims(); ++c)
      cond_rev[i * cfg.aux_dims() + c] = cond[(L - 1 - i) * cfg.aux_dims() + c];
  }
  Tensor fwd = gen.forward(make_constant(noise), make_constant(cond))->value;
  Tensor rev = gen.forward(make_constant(noise_rev), make_constant(cond_rev))->value;
  double worst = 0.0;
  for (int64_t i = 0; i < L; ++i) worst = std::max(worst, std::abs(rev[i] - fwd[L - 1 - i]));
  CHECK(worst < 1e-4);
}

TEST_CASE("chunked generation matches the single-pass output") {
  VocoderConfig cfg = tiny_config();
  ParamStore ps;
  Rng rng(61);
  VocoderGenerator gen(cfg, ps, rng);
  const int64_t L = 200;
  Rng data(62);
  Tensor noise = random_mat(L, 1, data, 1.0);
  Tensor cond = random_cond(L, cfg.aux_dims(), data);
  Tensor full = gen.forward(make_constant(noise), make_constant(cond))->value;

  Tensor one = gen.generate_chunked(noise, cond, L + 100);
  CHECK(std::memcmp(one.data(), full.data(), static_cast<size_t>(L) * sizeof(double)) == 0);

  for (int64_t chunk : {int64_t{64}, int64_t{57}, int64_t{200}}) {
    Tensor stitched = gen.generate_chunked(noise, cond, chunk);
    double worst = 0.0;
    for (int64_t i = 0; i < L; ++i) worst = std::max(worst, std::abs(stitched[i] - full[i]));
    CHECK(worst < 1e-12);
  }
  CHECK_THROWS_AS(gen.generate_chunked(noise, cond, 0), ConfigError);
}

TEST_CASE("spectral loss is zero exactly when magnitudes agree") {
  Rng rng(71);
  const int64_t L = 4800;
  Tensor sine({L});
  for (int64_t i = 0; i < L; ++i) sine[i] = 0.9 * std::sin(2.0 * M_PI * 440.0 * i / 48000.0);

  Var same = multires_stft_loss(make_constant(sine), sine);
  CHECK(same->value[0] == 0.0);

  Tensor flipped({L});
  for (int64_t i = 0; i < L; ++i) flipped[i] = -sine[i];
  Var anti = multires_stft_loss(make_constant(flipped), sine);
  CHECK(anti->value[0] == 0.0);

  Tensor noise({L});
  for (int64_t i = 0; i < L; ++i) noise[i] = rng.uniform(-0.9, 0.9);
  Var off = multires_stft_loss(make_constant(noise), sine);
  CHECK(off->value[0] > 1.0);

  Tensor shorter({L - 1});
  CHECK_THROWS_AS(multires_stft_loss(make_constant(shorter), sine), ContractError);
  CHECK_THROWS_AS(multires_stft_loss(make_constant(sine), sine, {}), ConfigError);
  Tensor stub({16});
  CHECK_THROWS_AS(multires_stft_loss(make_constant(stub), stub), ContractError);
}

TEST_CASE("spectral loss gradients match finite differences end to end") {
  VocoderConfig cfg;
  cfg.n_layers_per_stack = 2;
  cfg.n_stacks = 1;
  cfg.kernel = 3;
  cfg.residual_channels = 3;
  cfg.gate_channels = 6;
  cfg.skip_channels = 3;
  cfg.hop_samples = 4;
  cfg.n_mels = 2;
  cfg.upsample_factors = {2, 2};
  ParamStore ps;
  Rng rng(81);
  ConditioningUpsampler up(ps, "up", cfg, rng);
  VocoderGenerator gen(cfg, ps, rng);

  const int64_t T = 150, L = T * cfg.hop_samples;
  Rng data(82);
  Tensor cond = random_cond(T, cfg.aux_dims(), data);
  Tensor noise = random_mat(L, 1, data, 1.0);
  Tensor target({L});
  for (int64_t i = 0; i < L; ++i) target[i] = 0.5 * std::sin(2.0 * M_PI * i / 32.0);
  std::vector<StftResolution> res = {{256, 60, 240}, {512, 120, 480}};

  auto loss_fn = [&]() {
    Var wave = gen.forward(make_constant(noise), up.upsample(make_constant(cond)));
    return multires_stft_loss(wave, target, res);
  };
  Rng probe(83);
  GradCheckResult r = finite_difference_check(ps.vars(), loss_fn, 32, 1e-5, probe);
  CHECK(r.probes == 32);
  CHECK(r.max_rel_err < 1e-3);

  // Both entry points of the conditioning path carry gradient.
  ps.zero_grads();
  Var loss = loss_fn();
  backward(loss);
  Var stage = ps.find("up.up0.w");
  Var inject = ps.find("voc.s0l1.cond.w");
  REQUIRE(stage != nullptr);
  REQUIRE(inject != nullptr);
  double stage_norm = 0.0, inject_norm = 0.0;
  for (int64_t i = 0; i < stage->grad.size(); ++i) stage_norm += std::abs(stage->grad[i]);
  for (int64_t i = 0; i < inject->grad.size(); ++i) inject_norm += std::abs(inject->grad[i]);
  CHECK(stage_norm > 0.0);
  CHECK(inject_norm > 0.0);
}
