#include "svs/sf_gan.h"

#include <algorithm>

#include "svs/errors.h"

namespace svs {

SubBandSpec SubBandSpec::three_band(int64_t n_mels) {
  if (n_mels < 4 || n_mels % 4 != 0)
    throw ConfigError("three-band split needs a bin count divisible by 4");
  int64_t q = n_mels / 4;
  SubBandSpec s;
  s.bands = {{0, 2 * q}, {q, 3 * q}, {2 * q, n_mels}};
  return s;
}

SubBandSpec SubBandSpec::five_band() {
  SubBandSpec s;
  s.bands = {{0, 26}, {13, 39}, {26, 52}, {39, 65}, {52, 80}};
  return s;
}

void SubBandSpec::validate(int64_t n_mels) const {
  if (bands.empty()) throw ConfigError("band spec has no bands");
  for (size_t i = 0; i < bands.size(); ++i) {
    auto [lo, hi] = bands[i];
    if (!(0 <= lo && lo < hi && hi <= n_mels))
      throw ConfigError("band " + std::to_string(i) + " is outside [0, n_mels)");
    if (i > 0) {
      if (lo <= bands[i - 1].first) throw ConfigError("bands must be ordered by lower edge");
      if (lo >= bands[i - 1].second)
        throw ConfigError("adjacent bands must overlap");
    }
  }
  if (bands.front().first != 0 || bands.back().second != n_mels)
    throw ConfigError("bands must cover every mel bin");
}

std::vector<Tensor> split_subbands(const Tensor& mel, const SubBandSpec& spec) {
  if (mel.rank() != 2) throw ContractError("sub-band split expects a rank-2 mel");
  spec.validate(mel.cols());
  std::vector<Tensor> out;
  out.reserve(spec.bands.size());
  for (auto [lo, hi] : spec.bands) {
    Tensor band({mel.rows(), hi - lo});
    band.mat() = mel.mat().middleCols(lo, hi - lo);
    out.push_back(std::move(band));
  }
  return out;
}

FrameWindow sample_window(int64_t total_frames, int64_t min_frames, int64_t max_frames, Rng& rng) {
  if (total_frames <= 0) throw DomainError("cannot window an empty sequence");
  if (min_frames < 1 || max_frames < min_frames) throw ConfigError("bad window frame range");
  if (total_frames < min_frames) return {0, total_frames};
  int64_t len = rng.uniform_int(min_frames, std::min(max_frames, total_frames));
  int64_t start = rng.uniform_int(0, total_frames - len);
  return {start, len};
}

void SFDiscriminatorConfig::validate() const {
  if (n_layers < 1) throw ConfigError("spectrum discriminator needs at least one layer");
  if (channels < 1) throw ConfigError("spectrum discriminator needs at least one channel");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd");
  if (stride < 1) throw ConfigError("stride must be positive");
  if (min_window_frames < 1 || max_window_frames < min_window_frames)
    throw ConfigError("bad window frame range");
}

SFDiscriminator::SFDiscriminator(ParamStore& params, const std::string& name, int64_t band_bins,
                                 const SFDiscriminatorConfig& cfg, Rng& rng)
    : cfg_(cfg), band_bins_(band_bins) {
  cfg.validate();
  if (band_bins < 1) throw ConfigError("band has no bins");
  int64_t in = 1;
  for (int64_t l = 0; l < cfg.n_layers; ++l) {
    convs_.push_back(Conv2d::create(params, name + ".c" + std::to_string(l), in, cfg.channels,
                                    cfg.kernel, cfg.kernel, cfg.stride, cfg.stride, rng));
    in = cfg.channels;
  }
  proj_ = Conv2d::create(params, name + ".proj", in, 1, 1, 1, 1, 1, rng);
  for (const Conv2d& c : convs_) {
    params_.push_back(c.w);
    params_.push_back(c.b);
  }
  params_.push_back(proj_.w);
  params_.push_back(proj_.b);
}

Var SFDiscriminator::score(const Var& mel_band) const {
  if (mel_band->value.rank() != 2 || mel_band->value.cols() != band_bins_)
    throw ContractError("band width does not match this discriminator");
  Var x = reshape(mel_band, {1, mel_band->value.rows(), band_bins_});
  for (const Conv2d& c : convs_) x = leaky_relu(c(x), cfg_.leaky_slope);
  return proj_(x);
}

namespace {

Var mean_sq_to_one(const Var& s) { return mean(square(affine(s, -1.0, 1.0))); }

}  // namespace

Var sf_generator_loss(const std::vector<Var>& fake_scores, const SubBandSpec& spec) {
  if (fake_scores.size() != spec.bands.size())
    throw ContractError("one fake score map per band required");
  std::vector<Var> terms;
  terms.reserve(fake_scores.size());
  for (const Var& s : fake_scores) terms.push_back(mean_sq_to_one(s));
  return add_n(terms);
}

Var sf_discriminator_loss(const Var& real_scores, const Var& fake_scores) {
  return add(mean_sq_to_one(real_scores), mean(square(fake_scores)));
}

std::vector<Var> sf_discriminator_losses(const std::vector<Var>& real_scores,
                                         const std::vector<Var>& fake_scores) {
  if (real_scores.size() != fake_scores.size())
    throw ContractError("real/fake band counts disagree");
  std::vector<Var> out;
  out.reserve(real_scores.size());
  for (size_t i = 0; i < real_scores.size(); ++i)
    out.push_back(sf_discriminator_loss(real_scores[i], fake_scores[i]));
  return out;
}

}  // namespace svs
