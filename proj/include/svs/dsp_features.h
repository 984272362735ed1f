#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/tensor.h"
#include "svs/wav_io.h"

namespace svs {

// Frame grid shared by every extractor: frame t is centered on sample
// t * hop_samples of the reflect-padded signal, and T = ceil(len / hop).
struct FeatureConfig {
  int n_mels = 80;
  double window_seconds = 0.020;
  double hop_seconds = 0.005;  // window/hop must be exactly 4
  double mel_floor = 1e-5;     // magnitude floor before the log
  double f0_min_hz = 60.0;
  double f0_max_hz = 1600.0;
  double yin_threshold = 0.15;
  double yin_integration_seconds = 0.025;
  double silence_rms = 1e-4;  // frames quieter than this are unvoiced
};

struct AcousticFeatures {
  Tensor mel;                  // [T, n_mels], natural log of mel magnitudes
  std::vector<double> f0_hz;   // [T], 0 where unvoiced
  std::vector<uint8_t> vuv;    // [T], 1 = voiced
  double hop_seconds = 0.005;
  double window_seconds = 0.020;
  double sample_rate = 48000.0;

  int64_t frames() const { return mel.rows(); }
  void validate() const;  // throws ContractError on misaligned lengths
};

// Exact integer samples per hop; throws DomainError when hop * rate is not
// within 1e-6 of an integer (frame/sample conversion must be exact).
int64_t hop_samples(double hop_seconds, double sample_rate);

// HTK-scale mel filterbank [n_mels, n_fft/2 + 1] with unit-peak triangles.
Tensor mel_filterbank(int n_mels, int64_t n_fft, double sample_rate, double fmin, double fmax);

// Center frequencies (Hz) of the filters above, for tests and diagnostics.
std::vector<double> mel_filter_centers(int n_mels, double sample_rate, double fmin, double fmax);

Tensor mel_spectrogram(const Waveform& w, const FeatureConfig& cfg);

// Autocorrelation-difference pitch tracker on the mel frame grid.
std::vector<double> extract_f0(const Waveform& w, const FeatureConfig& cfg);

// Voiced iff f0 is strictly above threshold_hz.
std::vector<uint8_t> vuv_from_f0(const std::vector<double>& f0_hz, double threshold_hz = 3.0);

AcousticFeatures extract_features(const Waveform& w, const FeatureConfig& cfg);

// Corpus normalization: per-bin mel z-score; F0 handled on the semitone
// scale with statistics over voiced frames only.
struct NormStats {
  std::vector<double> mel_mean, mel_std;  // per mel bin
  double f0_mean_semitone = 0.0;
  double f0_std_semitone = 1.0;
  int64_t voiced_frames = 0;
};

NormStats compute_norm_stats(const std::vector<AcousticFeatures>& corpus);
Tensor normalize_mel(const Tensor& mel, const NormStats& stats);
Tensor denormalize_mel(const Tensor& mel, const NormStats& stats);
// Semitone z-score on voiced frames; unvoiced frames stay exactly 0.
std::vector<double> normalize_f0(const std::vector<double>& f0_hz,
                                 const std::vector<uint8_t>& vuv, const NormStats& stats);

// Binary feature cache (documented in the README); doubles round-trip exactly.
void save_features(const std::string& path, const AcousticFeatures& f);
AcousticFeatures load_features(const std::string& path);
void save_norm_stats(const std::string& path, const NormStats& stats);
NormStats load_norm_stats(const std::string& path);

}  // namespace svs
