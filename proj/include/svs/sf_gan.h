#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svs/nn.h"
#include "svs/rng.h"
#include "svs/tensor.h"

namespace svs {

// Overlapping half-open [lo, hi) mel-bin bands, one spectrum discriminator
// per band.
struct SubBandSpec {
  std::vector<std::pair<int64_t, int64_t>> bands;

  // (0,40), (20,60), (40,80) scaled to n_mels in halves/quarters.
  static SubBandSpec three_band(int64_t n_mels = 80);
  // (0,26), (13,39), (26,52), (39,65), (52,80) for 80 bins.
  static SubBandSpec five_band();

  // Bands ordered, inside [0, n_mels), covering it, each overlapping the next.
  void validate(int64_t n_mels) const;
};

// Column slices [lo, hi) of the mel matrix, one per band, values verbatim.
std::vector<Tensor> split_subbands(const Tensor& mel, const SubBandSpec& spec);

// A contiguous frame window chosen uniformly: length uniform over
// [min_frames, min(max_frames, total)], start uniform over valid positions.
// Sequences shorter than min_frames are used whole.
struct FrameWindow {
  int64_t start = 0;
  int64_t length = 0;
};
FrameWindow sample_window(int64_t total_frames, int64_t min_frames, int64_t max_frames, Rng& rng);

struct SFDiscriminatorConfig {
  int64_t n_layers = 3;
  int64_t channels = 32;
  int64_t kernel = 3;       // odd, square
  int64_t stride = 2;       // both axes
  double leaky_slope = 0.2;
  int64_t min_window_frames = 32;
  int64_t max_window_frames = 96;

  void validate() const;
};

// Strided 2D-convolution stack over one band of the mel image (channels =
// 1 feature plane of shape frames x band bins), closed by a 1x1 projection
// to a real-valued score map.
class SFDiscriminator {
 public:
  SFDiscriminator(ParamStore& params, const std::string& name, int64_t band_bins,
                  const SFDiscriminatorConfig& cfg, Rng& rng);

  // mel_band: [T, band_bins] -> score map [1, ceil(T/s^L), ceil(bins/s^L)].
  Var score(const Var& mel_band) const;

  const std::vector<Var>& parameters() const { return params_; }

 private:
  SFDiscriminatorConfig cfg_;
  int64_t band_bins_;
  std::vector<Conv2d> convs_;
  Conv2d proj_;
  std::vector<Var> params_;
};

// Least-squares adversarial losses. The generator drives every band's fake
// score toward 1; each band's discriminator drives real toward 1 and fake
// toward 0.
Var sf_generator_loss(const std::vector<Var>& fake_scores, const SubBandSpec& spec);
Var sf_discriminator_loss(const Var& real_scores, const Var& fake_scores);
std::vector<Var> sf_discriminator_losses(const std::vector<Var>& real_scores,
                                         const std::vector<Var>& fake_scores);

}  // namespace svs
