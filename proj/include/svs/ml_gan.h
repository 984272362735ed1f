#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/nn.h"
#include "svs/rng.h"

namespace svs {

// Waveform crop lengths judged by separate discriminators.
struct CropSpec {
  std::vector<double> lengths_s = {0.25, 0.5, 0.75, 1.0};
  double sample_rate = 48000.0;

  // Lengths positive, strictly ascending, and whole numbers of samples.
  void validate() const;
  std::vector<int64_t> lengths_samples() const;
};

// Uniform-start crop window. When the signal is shorter than the crop the
// whole signal is returned and `skipped` is set: that length's discriminator
// sits out this step. The same window is applied to the real and generated
// sides of a pair, so the discriminator compares aligned content.
struct CropWindow {
  int64_t start = 0;
  int64_t length = 0;
  bool skipped = false;
};
CropWindow random_crop(int64_t total_samples, int64_t crop_samples, Rng& rng);

struct MLDiscriminatorConfig {
  int64_t n_layers = 10;  // dilations 1, 2, ..., n_layers
  int64_t kernel = 9;     // odd
  int64_t channels = 64;
  double leaky_slope = 0.2;

  void validate() const;
};

// Non-causal dilated 1D-convolution stack over a raw waveform segment,
// dilation growing by one per layer, closed by a 1x1 projection to a
// per-sample score.
class MLDiscriminator {
 public:
  MLDiscriminator(ParamStore& params, const std::string& name, const MLDiscriminatorConfig& cfg,
                  Rng& rng);

  // segment: [L, 1] -> score map [L, 1].
  Var score(const Var& segment) const;

  const std::vector<Var>& parameters() const { return params_; }

 private:
  MLDiscriminatorConfig cfg_;
  std::vector<Conv1d> convs_;
  Conv1d proj_;
  std::vector<Var> params_;
};

// Least-squares adversarial losses over whatever lengths ran this step.
Var ml_generator_loss(const std::vector<Var>& fake_scores);
Var ml_discriminator_loss(const Var& real_scores, const Var& fake_scores);

}  // namespace svs
