#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/dsp_features.h"
#include "svs/nn.h"
#include "svs/rng.h"
#include "svs/wav_io.h"

namespace svs {

struct VocoderConfig {
  int64_t n_layers_per_stack = 10;  // dilations 1, 2, 4, ..., 2^(layers-1)
  int64_t n_stacks = 3;
  int64_t kernel = 13;  // odd
  int64_t residual_channels = 64;
  int64_t gate_channels = 128;  // split into tanh/sigmoid halves
  int64_t skip_channels = 64;
  int64_t hop_samples = 240;
  int64_t n_mels = 80;
  // Learned upsampling stages for the continuous conditioning columns;
  // product must equal hop_samples.
  std::vector<int64_t> upsample_factors = {4, 4, 15};

  void validate() const;
  int64_t aux_dims() const { return n_mels + 2; }  // mel + pitch + voicing
  std::vector<int64_t> dilations() const;
  int64_t receptive_field() const;  // 1 + n_stacks * (kernel-1) * sum(dilations)
};

// Per-frame conditioning matrix [T, n_mels+2]: z-scored mel, normalized
// voiced pitch (0 when unvoiced), and the 0/1 voicing flag.
Tensor build_conditioning(const AcousticFeatures& feats, const NormStats& stats);
void validate_conditioning(const Tensor& cond, int64_t n_mels);

// Frame-rate conditioning to sample rate: transposed convolutions for the
// continuous columns, nearest-frame repetition for the voicing flag so
// voiced/unvoiced boundaries stay hard.
class ConditioningUpsampler {
 public:
  ConditioningUpsampler(ParamStore& params, const std::string& name, const VocoderConfig& cfg,
                        Rng& rng);

  // [T, aux] -> [T*hop_samples, aux]
  Var upsample(const Var& cond_frames) const;

 private:
  VocoderConfig cfg_;
  std::vector<ConvTranspose1d> stages_;
};

// Gated non-causal dilated convolution stack over a noise sequence,
// conditioned per sample, with skip-sum output head bounded by tanh.
class VocoderGenerator {
 public:
  VocoderGenerator(const VocoderConfig& cfg, ParamStore& params, Rng& rng);

  const VocoderConfig& config() const { return cfg_; }
  int64_t receptive_field() const { return cfg_.receptive_field(); }

  // noise [L, 1], cond_upsampled [L, aux] -> waveform [L, 1] in (-1, 1).
  Var forward(const Var& noise, const Var& cond_upsampled) const;

  // Inference over arbitrarily long signals in fixed-size chunks, each
  // padded by the receptive-field margin so the stitched result matches the
  // single-pass output.
  Tensor generate_chunked(const Tensor& noise, const Tensor& cond_upsampled,
                          int64_t chunk_samples) const;

 private:
  struct Layer {
    Conv1d dilated;  // residual -> gate channels, dilated
    Conv1d cond;     // aux -> gate channels, 1x1
    Conv1d skip;     // half-gate -> skip, 1x1
    Conv1d res;      // half-gate -> residual, 1x1
  };

  VocoderConfig cfg_;
  Conv1d input_;
  std::vector<Layer> layers_;
  Conv1d post1_, post2_;
};

struct StftResolution {
  int64_t n_fft;
  int64_t hop;
  int64_t win;
};

// (1024/120/600), (2048/240/1200), (512/50/240) at 48 kHz.
std::vector<StftResolution> default_stft_resolutions();

// Mean over resolutions of spectral convergence + log-magnitude L1 between
// the predicted and target waveforms. Zero iff magnitudes match everywhere.
Var multires_stft_loss(const Var& pred, const Tensor& target,
                       const std::vector<StftResolution>& resolutions =
                           default_stft_resolutions());

}  // namespace svs
