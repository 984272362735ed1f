#include "svs/ml_gan.h"

#include <cmath>

#include "svs/errors.h"

namespace svs {

void CropSpec::validate() const {
  if (lengths_s.empty()) throw ConfigError("crop spec has no lengths");
  if (sample_rate <= 0.0) throw ConfigError("crop spec needs a positive sample rate");
  double prev = 0.0;
  for (double s : lengths_s) {
    if (s <= prev) throw ConfigError("crop lengths must be positive and ascending");
    double exact = s * sample_rate;
    if (std::abs(exact - std::round(exact)) > 1e-6 || std::round(exact) < 1.0)
      throw ConfigError("crop length must be a whole number of samples");
    prev = s;
  }
}

std::vector<int64_t> CropSpec::lengths_samples() const {
  validate();
  std::vector<int64_t> out;
  out.reserve(lengths_s.size());
  for (double s : lengths_s) out.push_back(static_cast<int64_t>(std::llround(s * sample_rate)));
  return out;
}

CropWindow random_crop(int64_t total_samples, int64_t crop_samples, Rng& rng) {
  if (total_samples <= 0) throw DomainError("cannot crop an empty signal");
  if (crop_samples < 1) throw ConfigError("crop length must be positive");
  if (total_samples < crop_samples) return {0, total_samples, true};
  int64_t start = rng.uniform_int(0, total_samples - crop_samples);
  return {start, crop_samples, false};
}

void MLDiscriminatorConfig::validate() const {
  if (n_layers < 1) throw ConfigError("waveform discriminator needs at least one layer");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd");
  if (channels < 1) throw ConfigError("waveform discriminator needs at least one channel");
}

MLDiscriminator::MLDiscriminator(ParamStore& params, const std::string& name,
                                 const MLDiscriminatorConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  int64_t in = 1;
  for (int64_t l = 0; l < cfg.n_layers; ++l) {
    convs_.push_back(Conv1d::create(params, name + ".c" + std::to_string(l), in, cfg.channels,
                                    cfg.kernel, l + 1, rng));
    in = cfg.channels;
  }
  proj_ = Conv1d::create(params, name + ".proj", in, 1, 1, 1, rng);
  for (const Conv1d& c : convs_) {
    params_.push_back(c.w);
    params_.push_back(c.b);
  }
  params_.push_back(proj_.w);
  params_.push_back(proj_.b);
}

Var MLDiscriminator::score(const Var& segment) const {
  if (segment->value.rank() != 2 || segment->value.cols() != 1)
    throw ContractError("waveform segment must be [L, 1]");
  Var x = segment;
  for (const Conv1d& c : convs_) x = leaky_relu(c(x), cfg_.leaky_slope);
  return proj_(x);
}

namespace {

Var mean_sq_to_one(const Var& s) { return mean(square(affine(s, -1.0, 1.0))); }

}  // namespace

Var ml_generator_loss(const std::vector<Var>& fake_scores) {
  if (fake_scores.empty()) throw ContractError("no score maps to aggregate");
  std::vector<Var> terms;
  terms.reserve(fake_scores.size());
  for (const Var& s : fake_scores) terms.push_back(mean_sq_to_one(s));
  return add_n(terms);
}

Var ml_discriminator_loss(const Var& real_scores, const Var& fake_scores) {
  return add(mean_sq_to_one(real_scores), mean(square(fake_scores)));
}

}  // namespace svs
