#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "svs/acoustic_model.h"
#include "svs/dsp_features.h"
#include "svs/ml_gan.h"
#include "svs/nn.h"
#include "svs/rng.h"
#include "svs/score_frontend.h"
#include "svs/sf_gan.h"
#include "svs/vocoder.h"

namespace svs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Adam with bias correction.  step() consumes whatever gradients have been
// accumulated on the tracked parameters; the caller owns zeroing.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Var> params, AdamConfig cfg);
  void step(double lr);
  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }

 private:
  std::vector<Var> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

struct RAdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
};

// Rectified Adam: while the variance estimate is based on too few effective
// samples it falls back to unadapted momentum SGD, afterwards it applies the
// variance-rectified Adam update.
class RAdam {
 public:
  RAdam() = default;
  RAdam(std::vector<Var> params, RAdamConfig cfg);
  void step(double lr);
  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }

 private:
  std::vector<Var> params_;
  RAdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

// Scales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_global_norm(const std::vector<Var>& params, double max_norm);

struct AcousticTrainSpec {
  int64_t steps = 60000;
  int64_t batch = 32;
  AdamConfig adam;
  int64_t d_model = 384;  // width term of the warm-up schedule
  int64_t warmup_steps = 4000;
  int64_t adv_start_step = 10000;
  double lambda_adv = 4.0;
  double grad_clip = 1.0;
  int64_t window_min_frames = 32;  // discriminator excerpt bounds
  int64_t window_max_frames = 96;
  int64_t checkpoint_every = 1000;
  uint64_t seed = 0;

  void validate() const;
};

struct VocoderTrainSpec {
  int64_t steps = 400000;
  int64_t batch = 4;
  RAdamConfig radam;
  double lr0 = 1e-4;
  int64_t halve_every = 200000;
  int64_t adv_start_step = 100000;
  double lambda_adv = 4.0;
  double grad_clip = 1.0;
  int64_t crop_frames = 100;  // training excerpt length, frames
  CropSpec crops;             // discriminator segment lengths
  // Spectral loss resolutions; every window must fit the training excerpt.
  std::vector<StftResolution> stft_resolutions = default_stft_resolutions();
  int64_t checkpoint_every = 1000;
  uint64_t seed = 0;

  void validate() const;
};

// Warm-up/decay schedule: d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).
// Pure; step 0 maps to 0 (the linear ramp starts there).
double lr_at_step(const AcousticTrainSpec& spec, int64_t step);
// Step decay: lr0 * 0.5^floor(step / halve_every).  Pure.
double lr_at_step(const VocoderTrainSpec& spec, int64_t step);

// Discriminators join the objective once `step` completed steps have passed;
// before that their loss terms contribute exactly 0 and they take no
// optimizer steps.
bool adversarial_gate(int64_t adv_start_step, int64_t step);

struct AcousticTrainItem {
  std::string name;
  ScoreSequence seq;
  AcousticFeatures feats;
};

struct VocoderTrainItem {
  std::string name;
  Tensor samples;  // [L, 1]
  Tensor cond;     // [T, n_mels + 2], normalized scale
};

void validate_acoustic_item(const AcousticTrainItem& item);
void validate_vocoder_item(const VocoderTrainItem& item, int64_t hop_samples, int64_t aux_dims);

struct TrainMetrics {
  int64_t step = 0;  // completed steps after this update
  double lr = 0.0;
  double total = 0.0;  // generator objective
  double mel_l1 = 0.0, f0 = 0.0, vuv = 0.0, dur = 0.0;  // acoustic terms
  double stft = 0.0;                                    // vocoder auxiliary term
  double adv_g = 0.0, adv_d = 0.0;                      // exactly 0 before the gate
  double grad_norm = 0.0, disc_grad_norm = 0.0;
  double ema_total = 0.0;
  bool gate_on = false;
};

std::string metrics_json_line(const TrainMetrics& m);

// One optimizer (pair) step at a time over an in-memory corpus: sample a
// minibatch, teacher-force the model, step the generator, and per the gate
// also step the band discriminators.
class AcousticTrainer {
 public:
  AcousticTrainer(const AcousticModelConfig& mcfg, int64_t phoneme_vocab,
                  const AcousticTrainSpec& spec, const NormStats& stats);

  TrainMetrics step(const std::vector<AcousticTrainItem>& corpus);
  int64_t steps_done() const { return step_; }
  const AcousticTrainSpec& spec() const { return spec_; }
  AcousticModel& model() { return *model_; }
  ParamStore& generator_params() { return g_params_; }
  ParamStore& discriminator_params() { return d_params_; }
  const NormStats& stats() const { return stats_; }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  AcousticModelConfig mcfg_;
  AcousticTrainSpec spec_;
  NormStats stats_;
  int64_t vocab_;
  ParamStore g_params_, d_params_;
  std::unique_ptr<AcousticModel> model_;
  SubBandSpec bands_;
  std::vector<std::unique_ptr<SFDiscriminator>> discs_;
  Adam g_opt_, d_opt_;
  Rng rng_;
  int64_t step_ = 0;
  double ema_ = 0.0;
};

// Vocoder counterpart: random conditioning excerpts, spectral auxiliary loss
// from the first step, per-length waveform discriminators after the gate.
class VocoderTrainer {
 public:
  VocoderTrainer(const VocoderConfig& vcfg, const VocoderTrainSpec& spec);

  TrainMetrics step(const std::vector<VocoderTrainItem>& corpus);
  int64_t steps_done() const { return step_; }
  const VocoderTrainSpec& spec() const { return spec_; }
  const VocoderConfig& config() const { return vcfg_; }
  VocoderGenerator& generator() { return *gen_; }
  ConditioningUpsampler& upsampler() { return *up_; }
  ParamStore& generator_params() { return g_params_; }
  ParamStore& discriminator_params() { return d_params_; }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  VocoderConfig vcfg_;
  VocoderTrainSpec spec_;
  ParamStore g_params_, d_params_;
  std::unique_ptr<ConditioningUpsampler> up_;
  std::unique_ptr<VocoderGenerator> gen_;
  std::vector<std::unique_ptr<MLDiscriminator>> discs_;
  RAdam g_opt_, d_opt_;
  Rng rng_;
  int64_t step_ = 0;
  double ema_ = 0.0;
};

}  // namespace svs
