#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/dsp_features.h"
#include "svs/nn.h"
#include "svs/rng.h"
#include "svs/score_frontend.h"

namespace svs {

struct AcousticModelConfig {
  int64_t n_encoder_blocks = 6;
  int64_t n_decoder_blocks = 6;
  int64_t hidden = 384;
  int64_t conv_kernel = 3;
  int64_t conv_filter = 1536;
  int64_t n_heads = 2;
  double dropout = 0.1;
  int64_t n_mels = 80;
  // Frame counts at or above the last bucket share its embedding row.
  int64_t duration_buckets = 512;

  void validate() const;
};

// One decoded utterance, all on the normalized training scale.
struct AcousticOutput {
  Var mel;          // [T, n_mels], z-scored scale
  Var f0_residual;  // [T, 1], semitones relative to the score note
  Var f0_semitone;  // [T, 1], note pitch + residual
  Var vuv_logit;    // [T, 1]
  Var dur_log;      // [N, 1] log-frame predictions
  std::vector<double> note_midi;      // per frame, 0 on rests
  std::vector<int64_t> durations;     // frames per phoneme actually used
};

// Repeats row i of `hiddens` durations[i] times, order preserved.
Var length_regulate(const Var& hiddens, const std::vector<int64_t>& durations);

// Inference rule for the log-domain duration head.
std::vector<int64_t> durations_from_log(const Tensor& dur_log);

// Feed-forward transformer encoder/decoder with a duration predictor, a
// length regulator, and mel / pitch-residual / voicing heads. The pitch head
// adds the score's note pitch back, so it only learns the residual.
class AcousticModel {
 public:
  AcousticModel(const AcousticModelConfig& cfg, int64_t phoneme_vocab, ParamStore& params,
                Rng& rng);

  const AcousticModelConfig& config() const { return cfg_; }

  // Summed phoneme/pitch/duration embeddings + positions -> encoder stack.
  Var encode(const ScoreSequence& seq, bool train, Rng& rng) const;

  // Log-frame-count per phoneme from encoder hiddens.
  Var predict_durations(const Var& hiddens, bool train, Rng& rng) const;

  // Decoder stack + output heads over length-regulated hiddens.
  AcousticOutput decode(const Var& expanded, const std::vector<double>& note_midi, bool train,
                        Rng& rng) const;

  // Teacher-forced pass: expand with the given durations, predict everything.
  AcousticOutput forward(const ScoreSequence& seq, const std::vector<int64_t>& durations,
                         bool train, Rng& rng) const;

  // Inference: durations come from the duration head.
  AcousticOutput infer(const ScoreSequence& seq) const;

 private:
  struct Block {
    Dense q, k, v, o;
    LayerNorm ln_attn, ln_conv;
    Conv1d widen, narrow;
  };

  Var run_block(const Block& b, Var x, bool train, Rng& rng) const;
  Block make_block(ParamStore& params, const std::string& name, Rng& rng) const;

  AcousticModelConfig cfg_;
  Embedding phoneme_emb_, pitch_emb_, dur_emb_;
  std::vector<Block> encoder_, decoder_;
  Conv1d dp_conv1_, dp_conv2_;
  LayerNorm dp_ln1_, dp_ln2_;
  Dense dp_out_;
  Dense mel_head_, f0_head_, vuv_head_;
};

// Reconstruction terms; the pitch term is masked to voiced target frames and
// the voicing term is a logit-stable binary cross-entropy.
struct AcousticLoss {
  Var mel_l1;
  Var f0_l2;    // squared semitones, voiced frames only
  Var vuv_bce;
  Var dur_mse;  // log domain
  Var total;    // mel_l1 + 0.1*f0_l2 + 0.1*vuv_bce + dur_mse
};

AcousticLoss reconstruction_loss(const Var& mel_pred, const Var& f0_semitone_pred,
                                 const Var& vuv_logit, const Var& dur_log_pred,
                                 const Tensor& mel_target, const std::vector<double>& f0_target_hz,
                                 const std::vector<uint8_t>& vuv_target,
                                 const std::vector<int64_t>& dur_target_frames);

}  // namespace svs
