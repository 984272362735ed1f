#pragma once

#include <memory>
#include <string>
#include <vector>

#include "svs/acoustic_model.h"
#include "svs/dsp_features.h"
#include "svs/score_frontend.h"
#include "svs/synth_corpus.h"
#include "svs/trainer.h"
#include "svs/vocoder.h"
#include "svs/wav_io.h"

namespace svs {

// Frozen acoustic stage restored from a training snapshot; carries the
// normalization statistics the model was trained against.
class AcousticInference {
 public:
  explicit AcousticInference(const std::string& snapshot_path);

  const AcousticModelConfig& config() const { return cfg_; }
  const NormStats& stats() const { return stats_; }
  int64_t phoneme_vocab() const { return vocab_; }

  // Durations from the duration head.
  AcousticOutput infer(const ScoreSequence& seq) const;
  // Teacher-forced pass with externally supplied durations (metric runs).
  AcousticOutput forward(const ScoreSequence& seq, const std::vector<int64_t>& durations) const;

 private:
  AcousticModelConfig cfg_;
  NormStats stats_;
  int64_t vocab_ = 0;
  ParamStore params_;
  std::unique_ptr<AcousticModel> model_;
};

// Frozen vocoder stage restored from a training snapshot.
class VocoderInference {
 public:
  explicit VocoderInference(const std::string& snapshot_path);

  const VocoderConfig& config() const { return cfg_; }

  // Frame-rate conditioning [T, n_mels+2] -> T * hop_samples waveform
  // samples, generated in fixed-size chunks.
  std::vector<double> generate(const Tensor& cond_frames, Rng noise_rng,
                               int64_t chunk_frames = 200) const;

 private:
  VocoderConfig cfg_;
  ParamStore params_;
  std::unique_ptr<ConditioningUpsampler> up_;
  std::unique_ptr<VocoderGenerator> gen_;
};

// Conditioning matrix assembled from predicted acoustic outputs, laid out
// exactly like build_conditioning: z-scored mel, normalized voiced pitch
// (0 when unvoiced), 0/1 voicing flag from the logit sign.
Tensor conditioning_from_acoustic(const AcousticOutput& out, const NormStats& stats);

struct SynthesisRequest {
  double sample_rate = 48000.0;
  double hop_seconds = 0.005;
  uint64_t seed = 0;
  int64_t chunk_frames = 200;  // vocoder chunk size, frames
};

// Full chain: encode -> predicted durations -> decode -> conditioning ->
// vocoder.  Output length is exactly (sum of predicted frames) * hop.
// Throws ConfigError when the checkpoints disagree on mel bins or the
// vocoder hop does not match the requested frame rate.
Waveform synthesize(const Score& score, const Lexicon& lexicon, const AcousticInference& acoustic,
                    const VocoderInference& vocoder, const SynthesisRequest& req);

// Objective comparison metrics; lengths align by truncation to the shorter
// signal.  All metrics are non-negative and 0 for identical inputs.
struct EvalMetrics {
  double mel_l1 = 0.0;              // mean |log-mel difference| per bin
  double f0_rmse_cents = 0.0;       // both-voiced frames; 0 if none overlap
  double vuv_error_rate = 0.0;      // fraction of frames with flipped voicing
  double spectral_convergence = 0.0;  // relative Frobenius error, linear mel
};

struct EvalUtterance {
  std::string name;
  int64_t frames = 0;  // overlap length the metrics were computed on
  EvalMetrics metrics;
};

struct EvalReport {
  std::vector<EvalUtterance> utterances;
  EvalMetrics aggregate;  // unweighted mean over utterances
};

// Throws DataError when the overlap is empty, ContractError on bin mismatch.
EvalMetrics evaluate_features(const AcousticFeatures& pred, const AcousticFeatures& ref);
EvalMetrics evaluate_waveforms(const Waveform& pred, const Waveform& ref,
                               const FeatureConfig& cfg);

EvalReport make_report(std::vector<EvalUtterance> utterances);
std::string report_to_json(const EvalReport& report);

// Corpus-to-trainer adapters: extract features and package them with the
// score's exact frame alignment (acoustic) or as conditioning rows (vocoder).
AcousticTrainItem make_acoustic_item(const SyntheticUtterance& utt, const FeatureConfig& cfg);
VocoderTrainItem make_vocoder_item(const SyntheticUtterance& utt, const FeatureConfig& cfg,
                                   const NormStats& stats);

}  // namespace svs
