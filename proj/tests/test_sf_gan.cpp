#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "svs/errors.h"
#include "svs/sf_gan.h"

using namespace svs;

namespace {

Tensor random_mel(int64_t T, int64_t B, Rng& rng) {
  Tensor m({T, B});
  for (int64_t i = 0; i < m.size(); ++i) m[i] = rng.normal();
  return m;
}

double chi_square(const std::vector<int64_t>& counts, double expected) {
  double chi = 0.0;
  for (int64_t c : counts) {
    double d = static_cast<double>(c) - expected;
    chi += d * d / expected;
  }
  return chi;
}

}  // namespace

TEST_CASE("default three-band split of 80 bins") {
  SubBandSpec s = SubBandSpec::three_band(80);
  REQUIRE(s.bands.size() == 3);
  CHECK(s.bands[0] == std::pair<int64_t, int64_t>{0, 40});
  CHECK(s.bands[1] == std::pair<int64_t, int64_t>{20, 60});
  CHECK(s.bands[2] == std::pair<int64_t, int64_t>{40, 80});
  s.validate(80);

  // Coverage: every bin in >=1 band; bins 20-39 and 40-59 in exactly 2.
  for (int64_t bin = 0; bin < 80; ++bin) {
    int hits = 0;
    for (auto [lo, hi] : s.bands) hits += (bin >= lo && bin < hi) ? 1 : 0;
    CHECK(hits >= 1);
    if (bin >= 20 && bin < 60) CHECK(hits == 2);
  }
}

TEST_CASE("five-band ablation split") {
  SubBandSpec s = SubBandSpec::five_band();
  REQUIRE(s.bands.size() == 5);
  CHECK(s.bands[0] == std::pair<int64_t, int64_t>{0, 26});
  CHECK(s.bands[1] == std::pair<int64_t, int64_t>{13, 39});
  CHECK(s.bands[2] == std::pair<int64_t, int64_t>{26, 52});
  CHECK(s.bands[3] == std::pair<int64_t, int64_t>{39, 65});
  CHECK(s.bands[4] == std::pair<int64_t, int64_t>{52, 80});
  s.validate(80);
}

TEST_CASE("band spec validation rejects gaps, reversals, and bad edges") {
  SubBandSpec s;
  s.bands = {{0, 30}, {30, 80}};  // touching but not overlapping
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {{0, 30}, {25, 70}};  // hole at the top
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {{5, 80}};  // hole at the bottom
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {{0, 90}};  // beyond the last bin
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {{40, 80}, {0, 60}};  // out of order
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {};
  CHECK_THROWS_AS(s.validate(80), ConfigError);
  s.bands = {{0, 80}};  // single full band is fine
  s.validate(80);
}

TEST_CASE("split_subbands returns verbatim column slices") {
  Rng rng(5);
  Tensor mel = random_mel(7, 80, rng);
  SubBandSpec spec = SubBandSpec::three_band(80);
  std::vector<Tensor> bands = split_subbands(mel, spec);
  REQUIRE(bands.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    auto [lo, hi] = spec.bands[i];
    CHECK(bands[i].rows() == 7);
    CHECK(bands[i].cols() == hi - lo);
    for (int64_t t = 0; t < 7; ++t)
      for (int64_t m = lo; m < hi; ++m) CHECK(bands[i].at(t, m - lo) == mel.at(t, m));
  }

  SubBandSpec identity;
  identity.bands = {{0, 80}};
  std::vector<Tensor> whole = split_subbands(mel, identity);
  REQUIRE(whole.size() == 1);
  for (int64_t i = 0; i < mel.size(); ++i) CHECK(whole[0][i] == mel[i]);

  SubBandSpec bad;
  bad.bands = {{0, 30}, {40, 80}};
  CHECK_THROWS_AS(split_subbands(mel, bad), ConfigError);
}

TEST_CASE("window starts are uniform over valid positions") {
  Rng rng(101);
  std::vector<int64_t> counts(61, 0);
  for (int i = 0; i < 10000; ++i) {
    FrameWindow w = sample_window(100, 40, 40, rng);
    CHECK(w.length == 40);
    REQUIRE(w.start >= 0);
    REQUIRE(w.start <= 60);
    ++counts[static_cast<size_t>(w.start)];
  }
  // 60 degrees of freedom, 1% critical value.
  CHECK(chi_square(counts, 10000.0 / 61.0) < 88.379);
}

TEST_CASE("window lengths are uniform over the allowed range") {
  Rng rng(202);
  std::vector<int64_t> counts(65, 0);
  for (int i = 0; i < 20000; ++i) {
    FrameWindow w = sample_window(200, 32, 96, rng);
    REQUIRE(w.length >= 32);
    REQUIRE(w.length <= 96);
    REQUIRE(w.start + w.length <= 200);
    ++counts[static_cast<size_t>(w.length - 32)];
  }
  // 64 degrees of freedom, 1% critical value.
  CHECK(chi_square(counts, 20000.0 / 65.0) < 93.217);
}

TEST_CASE("short sequences fall back to the whole sequence") {
  Rng rng(3);
  FrameWindow w = sample_window(20, 32, 96, rng);
  CHECK(w.start == 0);
  CHECK(w.length == 20);
  w = sample_window(32, 32, 96, rng);
  CHECK(w.start == 0);
  CHECK(w.length == 32);
  CHECK_THROWS_AS(sample_window(0, 32, 96, rng), DomainError);
  CHECK_THROWS_AS(sample_window(10, 0, 96, rng), ConfigError);
}

TEST_CASE("windowed fragments are verbatim slices") {
  Rng rng(17);
  Tensor mel = random_mel(120, 40, rng);
  for (int rep = 0; rep < 20; ++rep) {
    FrameWindow w = sample_window(mel.rows(), 32, 96, rng);
    Var frag = row_slice(make_constant(mel), w.start, w.start + w.length);
    for (int64_t t = 0; t < w.length; ++t)
      for (int64_t m = 0; m < 40; ++m)
        CHECK(frag->value.at(t, m) == mel.at(w.start + t, m));
  }
}

TEST_CASE("generator loss oracles") {
  SubBandSpec spec = SubBandSpec::three_band(80);
  auto constant_scores = [&](double v) {
    std::vector<Var> s;
    for (size_t i = 0; i < 3; ++i) s.push_back(make_constant(Tensor::full({1, 4, 5}, v)));
    return s;
  };
  CHECK(sf_generator_loss(constant_scores(1.0), spec)->value[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sf_generator_loss(constant_scores(0.0), spec)->value[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(sf_generator_loss(constant_scores(0.5), spec)->value[0] ==
        doctest::Approx(0.75).epsilon(1e-6));
  std::vector<Var> two = {make_constant(Tensor::full({1, 2, 2}, 0.5)),
                          make_constant(Tensor::full({1, 2, 2}, 0.5))};
  CHECK_THROWS_AS(sf_generator_loss(two, spec), ContractError);
}

TEST_CASE("discriminator loss oracles") {
  auto c = [](double v) { return make_constant(Tensor::full({1, 3, 3}, v)); };
  CHECK(sf_discriminator_loss(c(1.0), c(0.0))->value[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sf_discriminator_loss(c(0.0), c(1.0))->value[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sf_discriminator_loss(c(0.5), c(0.5))->value[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(sf_discriminator_losses({c(1.0)}, {c(1.0), c(0.0)}), ContractError);
}

TEST_CASE("discriminator score map shape follows the stride stack") {
  ParamStore ps;
  Rng rng(7);
  SFDiscriminatorConfig cfg;
  SFDiscriminator d(ps, "d", 40, cfg, rng);
  Var band = make_constant(random_mel(64, 40, rng));
  Var s = d.score(band);
  // 64 -> 32 -> 16 -> 8 frames; 40 -> 20 -> 10 -> 5 bins.
  CHECK(s->value.shape() == std::vector<int64_t>{1, 8, 5});
  for (int64_t i = 0; i < s->value.size(); ++i) CHECK(std::isfinite(s->value[i]));

  Var wrong = make_constant(random_mel(64, 26, rng));
  CHECK_THROWS_AS(d.score(wrong), ContractError);
}

TEST_CASE("discriminator gradients agree with finite differences") {
  ParamStore ps;
  Rng rng(23);
  SFDiscriminatorConfig cfg;
  cfg.channels = 4;
  SFDiscriminator d(ps, "d", 12, cfg, rng);
  Tensor real = random_mel(16, 12, rng);
  Tensor fake = random_mel(16, 12, rng);
  auto loss_fn = [&]() {
    return sf_discriminator_loss(d.score(make_constant(real)), d.score(make_constant(fake)));
  };
  Rng probe(91);
  GradCheckResult res = finite_difference_check(ps.vars(), loss_fn, 40, 1e-5, probe);
  CHECK(res.probes == 40);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("generator adversarial gradient skips frozen discriminators") {
  ParamStore d_params, g_params;
  Rng rng(11);
  SFDiscriminatorConfig cfg;
  cfg.channels = 4;
  SubBandSpec spec = SubBandSpec::three_band(8);
  std::vector<SFDiscriminator> ds;
  for (size_t b = 0; b < spec.bands.size(); ++b)
    ds.emplace_back(d_params, "d" + std::to_string(b), spec.bands[b].second - spec.bands[b].first,
                    cfg, rng);

  Var g_mel = g_params.create("g.mel", random_mel(40, 8, rng));
  d_params.freeze(true);
  std::vector<Var> fake_scores;
  for (size_t b = 0; b < spec.bands.size(); ++b)
    fake_scores.push_back(
        ds[b].score(col_slice(g_mel, spec.bands[b].first, spec.bands[b].second)));
  Var loss = sf_generator_loss(fake_scores, spec);
  backward(loss);
  d_params.freeze(false);

  // Generator input received gradient; discriminator parameters none.
  double gsum = 0.0;
  for (int64_t i = 0; i < g_mel->grad.size(); ++i) gsum += std::abs(g_mel->grad[i]);
  CHECK(gsum > 0.0);
  for (const auto& [name, v] : d_params.items()) {
    CAPTURE(name);
    CHECK(v->grad.size() == 0);
  }
}

TEST_CASE("band discriminators never share parameters") {
  ParamStore ps;
  Rng rng(31);
  SFDiscriminatorConfig cfg;
  cfg.channels = 4;
  SubBandSpec spec = SubBandSpec::three_band(8);
  std::vector<SFDiscriminator> ds;
  for (size_t b = 0; b < spec.bands.size(); ++b)
    ds.emplace_back(ps, "d" + std::to_string(b), spec.bands[b].second - spec.bands[b].first, cfg,
                    rng);

  // Snapshot all parameters, step band 0 only, others must be bitwise equal.
  std::vector<Tensor> before;
  for (const auto& [name, v] : ps.items()) before.push_back(v->value);

  Tensor mel = random_mel(40, 8, rng);
  Var real = make_constant(mel);
  Var fake = make_constant(random_mel(40, 8, rng));
  auto b0 = spec.bands[0];
  Var loss = sf_discriminator_loss(ds[0].score(col_slice(real, b0.first, b0.second)),
                                   ds[0].score(col_slice(fake, b0.first, b0.second)));
  ps.zero_grads();
  backward(loss);
  for (const Var& v : ds[0].parameters())
    if (v->grad.size() > 0)
      for (int64_t i = 0; i < v->value.size(); ++i) v->value[i] -= 0.1 * v->grad[i];

  size_t idx = 0;
  bool band0_changed = false;
  for (const auto& [name, v] : ps.items()) {
    bool same = std::memcmp(v->value.data(), before[idx].data(),
                            sizeof(double) * static_cast<size_t>(v->value.size())) == 0;
    if (name.rfind("d0.", 0) == 0) {
      band0_changed = band0_changed || !same;
    } else {
      CAPTURE(name);
      CHECK(same);
    }
    ++idx;
  }
  CHECK(band0_changed);
}
