#include "svs/dsp_features.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "svs/errors.h"
#include "svs/fft.h"
#include "svs/score_frontend.h"

namespace svs {
namespace {

constexpr double kTau = 6.283185307179586477;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Reflection without edge repetition, defined for any index.
int64_t reflect_index(int64_t i, int64_t len) {
  if (len == 1) return 0;
  int64_t period = 2 * (len - 1);
  i = ((i % period) + period) % period;
  return i < len ? i : period - i;
}

// Periodic Hann: symmetric about j = win/2, which is where the frame grid
// places the center sample. That pairing makes each frame's magnitude
// spectrum invariant under time reversal of the signal (the windowed frame
// becomes a circular reversal of itself, w[0] = 0 closing the wrap).
std::vector<double> hann_periodic(int64_t win) {
  std::vector<double> w(static_cast<size_t>(win));
  for (int64_t j = 0; j < win; ++j)
    w[static_cast<size_t>(j)] =
        0.5 - 0.5 * std::cos(kTau * static_cast<double>(j) / static_cast<double>(win));
  return w;
}

void check_grid(const Waveform& w, const FeatureConfig& cfg, int64_t& hop, int64_t& win) {
  hop = hop_samples(cfg.hop_seconds, w.sample_rate);
  win = hop_samples(cfg.window_seconds, w.sample_rate);
  if (win != 4 * hop) throw ConfigError("analysis window must be exactly 4 hops");
  if (w.samples.empty()) throw DomainError("empty waveform");
}

}  // namespace

void AcousticFeatures::validate() const {
  if (mel.rank() != 2) throw ContractError("features: mel must be rank 2");
  int64_t T = mel.rows();
  if (static_cast<int64_t>(f0_hz.size()) != T || static_cast<int64_t>(vuv.size()) != T)
    throw ContractError("features: mel/f0/vuv frame counts disagree");
  if (hop_seconds <= 0.0 || window_seconds <= 0.0 || sample_rate <= 0.0)
    throw ContractError("features: non-positive grid parameters");
}

int64_t hop_samples(double hop_seconds, double sample_rate) {
  if (hop_seconds <= 0.0 || sample_rate <= 0.0)
    throw DomainError("hop and sample rate must be positive");
  double exact = hop_seconds * sample_rate;
  int64_t n = static_cast<int64_t>(std::llround(exact));
  if (n < 1 || std::abs(exact - static_cast<double>(n)) > 1e-6)
    throw DomainError("hop must be an integer number of samples");
  return n;
}

Tensor mel_filterbank(int n_mels, int64_t n_fft, double sample_rate, double fmin, double fmax) {
  if (n_mels < 1) throw ConfigError("need at least one mel filter");
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0 + 1e-9))
    throw ConfigError("bad mel frequency range");
  int64_t bins = n_fft / 2 + 1;
  double mel_lo = hz_to_mel(fmin);
  double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<size_t>(n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));

  Tensor fb({n_mels, bins});
  for (int m = 0; m < n_mels; ++m) {
    double lo = edges[static_cast<size_t>(m)];
    double c = edges[static_cast<size_t>(m) + 1];
    double hi = edges[static_cast<size_t>(m) + 2];
    for (int64_t k = 0; k < bins; ++k) {
      double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double wgt = 0.0;
      if (f > lo && f < hi) wgt = f <= c ? (f - lo) / (c - lo) : (hi - f) / (hi - c);
      fb.at(m, k) = wgt;
    }
  }
  return fb;
}

std::vector<double> mel_filter_centers(int n_mels, double sample_rate, double fmin, double fmax) {
  if (fmax <= 0.0) fmax = sample_rate / 2.0;
  double mel_lo = hz_to_mel(fmin);
  double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers(static_cast<size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m)
    centers[static_cast<size_t>(m)] = mel_to_hz(
        mel_lo + (mel_hi - mel_lo) * static_cast<double>(m + 1) / static_cast<double>(n_mels + 1));
  return centers;
}

Tensor mel_spectrogram(const Waveform& w, const FeatureConfig& cfg) {
  int64_t hop = 0, win = 0;
  check_grid(w, cfg, hop, win);
  int64_t L = static_cast<int64_t>(w.samples.size());
  int64_t T = (L + hop - 1) / hop;
  int64_t n_fft = next_pow2(win);
  int64_t bins = n_fft / 2 + 1;
  std::vector<double> window = hann_periodic(win);

  Tensor mag({T, bins});
  std::vector<double> buf(static_cast<size_t>(n_fft), 0.0);
  std::vector<double> re(static_cast<size_t>(bins)), im(static_cast<size_t>(bins));
  for (int64_t t = 0; t < T; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    int64_t center = t * hop;
    for (int64_t j = 0; j < win; ++j) {
      int64_t src = reflect_index(center - win / 2 + j, L);
      buf[static_cast<size_t>(j)] = w.samples[static_cast<size_t>(src)] * window[static_cast<size_t>(j)];
    }
    rfft(buf.data(), n_fft, re.data(), im.data());
    for (int64_t k = 0; k < bins; ++k)
      mag.at(t, k) = std::hypot(re[static_cast<size_t>(k)], im[static_cast<size_t>(k)]);
  }

  Tensor fb = mel_filterbank(cfg.n_mels, n_fft, w.sample_rate, 0.0, -1.0);
  Tensor mel({T, cfg.n_mels});
  mel.mat().noalias() = mag.mat() * fb.mat().transpose();
  for (int64_t i = 0; i < mel.size(); ++i) mel[i] = std::log(std::max(mel[i], cfg.mel_floor));
  return mel;
}

std::vector<double> extract_f0(const Waveform& w, const FeatureConfig& cfg) {
  int64_t hop = 0, win = 0;
  check_grid(w, cfg, hop, win);
  if (!(cfg.f0_min_hz > 0.0 && cfg.f0_min_hz < cfg.f0_max_hz &&
        cfg.f0_max_hz <= w.sample_rate / 2.0))
    throw ConfigError("bad pitch search range");

  int64_t L = static_cast<int64_t>(w.samples.size());
  int64_t T = (L + hop - 1) / hop;
  int64_t W = std::max<int64_t>(64, static_cast<int64_t>(std::llround(
                                        cfg.yin_integration_seconds * w.sample_rate)));
  int64_t tau_max = static_cast<int64_t>(std::ceil(w.sample_rate / cfg.f0_min_hz));
  int64_t tau_min = std::max<int64_t>(2, static_cast<int64_t>(w.sample_rate / cfg.f0_max_hz));
  int64_t buf_len = W + tau_max;

  std::vector<double> f0(static_cast<size_t>(T), 0.0);
  std::vector<double> b(static_cast<size_t>(buf_len));
  std::vector<double> d(static_cast<size_t>(tau_max) + 1);
  std::vector<double> cmnd(static_cast<size_t>(tau_max) + 1);

  for (int64_t t = 0; t < T; ++t) {
    int64_t center = t * hop;
    // Slide the analysis span inside the signal instead of mirroring: the
    // mirror flips the waveform's sign pattern and destroys periodicity at
    // the edges, which misreads the period there. Mirror only when the
    // whole signal is shorter than one span.
    int64_t start = center - buf_len / 2;
    if (L >= buf_len) start = std::clamp<int64_t>(start, 0, L - buf_len);
    double energy = 0.0;
    for (int64_t i = 0; i < buf_len; ++i) {
      int64_t src = start + i;
      if (src < 0 || src >= L) src = reflect_index(src, L);
      b[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(src)];
      energy += b[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
    }
    if (std::sqrt(energy / static_cast<double>(buf_len)) < cfg.silence_rms) continue;

    // Difference function and its cumulative-mean normalization.
    d[0] = 0.0;
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int64_t tau = 1; tau <= tau_max; ++tau) {
      double acc = 0.0;
      const double* p = b.data();
      const double* q = b.data() + tau;
      for (int64_t j = 0; j < W; ++j) {
        double diff = p[j] - q[j];
        acc += diff * diff;
      }
      d[static_cast<size_t>(tau)] = acc;
      running += acc;
      cmnd[static_cast<size_t>(tau)] =
          running > 1e-300 ? acc * static_cast<double>(tau) / running : 1.0;
    }

    // First dip under the threshold, walked to its local minimum.
    int64_t tau = -1;
    for (int64_t k = tau_min; k <= tau_max; ++k) {
      if (cmnd[static_cast<size_t>(k)] < cfg.yin_threshold) {
        tau = k;
        while (tau + 1 <= tau_max && cmnd[static_cast<size_t>(tau) + 1] < cmnd[static_cast<size_t>(tau)])
          ++tau;
        break;
      }
    }
    if (tau < 0) continue;

    double refined = static_cast<double>(tau);
    if (tau > tau_min && tau < tau_max) {
      double a = cmnd[static_cast<size_t>(tau) - 1];
      double c = cmnd[static_cast<size_t>(tau)];
      double e = cmnd[static_cast<size_t>(tau) + 1];
      double denom = a - 2.0 * c + e;
      if (std::abs(denom) > 1e-12) {
        double shift = 0.5 * (a - e) / denom;
        if (shift > -1.0 && shift < 1.0) refined += shift;
      }
    }
    double hz = w.sample_rate / refined;
    if (hz >= cfg.f0_min_hz && hz <= cfg.f0_max_hz) f0[static_cast<size_t>(t)] = hz;
  }
  return f0;
}

std::vector<uint8_t> vuv_from_f0(const std::vector<double>& f0_hz, double threshold_hz) {
  std::vector<uint8_t> vuv(f0_hz.size());
  for (size_t i = 0; i < f0_hz.size(); ++i) {
    if (f0_hz[i] < 0.0) throw DomainError("f0 must be non-negative");
    vuv[i] = f0_hz[i] > threshold_hz ? 1 : 0;
  }
  return vuv;
}

AcousticFeatures extract_features(const Waveform& w, const FeatureConfig& cfg) {
  AcousticFeatures f;
  f.mel = mel_spectrogram(w, cfg);
  f.f0_hz = extract_f0(w, cfg);
  f.vuv = vuv_from_f0(f.f0_hz);
  f.hop_seconds = cfg.hop_seconds;
  f.window_seconds = cfg.window_seconds;
  f.sample_rate = w.sample_rate;
  f.validate();
  return f;
}

NormStats compute_norm_stats(const std::vector<AcousticFeatures>& corpus) {
  if (corpus.empty()) throw DataError("cannot compute statistics over an empty corpus");
  int64_t n_mels = corpus[0].mel.cols();
  std::vector<double> sum(static_cast<size_t>(n_mels), 0.0);
  int64_t frames = 0;
  double f0_sum = 0.0;
  int64_t voiced = 0;
  for (const AcousticFeatures& f : corpus) {
    f.validate();
    if (f.mel.cols() != n_mels) throw ContractError("mixed mel sizes in corpus");
    for (int64_t t = 0; t < f.mel.rows(); ++t) {
      for (int64_t m = 0; m < n_mels; ++m) sum[static_cast<size_t>(m)] += f.mel.at(t, m);
      if (f.vuv[static_cast<size_t>(t)]) {
        f0_sum += hz_to_semitone(f.f0_hz[static_cast<size_t>(t)]);
        ++voiced;
      }
    }
    frames += f.mel.rows();
  }
  if (frames == 0) throw DataError("corpus has no frames");
  if (voiced == 0) throw DataError("corpus has no voiced frames");

  NormStats s;
  s.mel_mean.resize(static_cast<size_t>(n_mels));
  s.mel_std.assign(static_cast<size_t>(n_mels), 0.0);
  for (int64_t m = 0; m < n_mels; ++m)
    s.mel_mean[static_cast<size_t>(m)] = sum[static_cast<size_t>(m)] / static_cast<double>(frames);
  s.f0_mean_semitone = f0_sum / static_cast<double>(voiced);
  s.voiced_frames = voiced;

  // Second pass around the means: a one-pass moment formula loses the
  // constant-bin case to cancellation.
  std::vector<double> var(static_cast<size_t>(n_mels), 0.0);
  double f0_var = 0.0;
  for (const AcousticFeatures& f : corpus) {
    for (int64_t t = 0; t < f.mel.rows(); ++t) {
      for (int64_t m = 0; m < n_mels; ++m) {
        double d = f.mel.at(t, m) - s.mel_mean[static_cast<size_t>(m)];
        var[static_cast<size_t>(m)] += d * d;
      }
      if (f.vuv[static_cast<size_t>(t)]) {
        double d = hz_to_semitone(f.f0_hz[static_cast<size_t>(t)]) - s.f0_mean_semitone;
        f0_var += d * d;
      }
    }
  }
  for (int64_t m = 0; m < n_mels; ++m) {
    double sd = std::sqrt(var[static_cast<size_t>(m)] / static_cast<double>(frames));
    if (sd < 1e-9)
      throw DataError("mel bin " + std::to_string(m) + " is constant across the corpus");
    s.mel_std[static_cast<size_t>(m)] = sd;
  }
  s.f0_std_semitone = std::sqrt(f0_var / static_cast<double>(voiced));
  if (s.f0_std_semitone < 1e-9) throw DataError("voiced pitch is constant across the corpus");
  return s;
}

Tensor normalize_mel(const Tensor& mel, const NormStats& stats) {
  if (mel.cols() != static_cast<int64_t>(stats.mel_mean.size()))
    throw ContractError("mel width does not match statistics");
  Tensor out = mel;
  for (int64_t t = 0; t < out.rows(); ++t)
    for (int64_t m = 0; m < out.cols(); ++m) {
      double sd = stats.mel_std[static_cast<size_t>(m)];
      if (sd <= 0.0) throw DataError("statistics carry a zero mel deviation");
      out.at(t, m) = (out.at(t, m) - stats.mel_mean[static_cast<size_t>(m)]) / sd;
    }
  return out;
}

Tensor denormalize_mel(const Tensor& mel, const NormStats& stats) {
  if (mel.cols() != static_cast<int64_t>(stats.mel_mean.size()))
    throw ContractError("mel width does not match statistics");
  Tensor out = mel;
  for (int64_t t = 0; t < out.rows(); ++t)
    for (int64_t m = 0; m < out.cols(); ++m)
      out.at(t, m) = out.at(t, m) * stats.mel_std[static_cast<size_t>(m)] +
                     stats.mel_mean[static_cast<size_t>(m)];
  return out;
}

std::vector<double> normalize_f0(const std::vector<double>& f0_hz,
                                 const std::vector<uint8_t>& vuv, const NormStats& stats) {
  if (f0_hz.size() != vuv.size()) throw ContractError("f0/vuv length mismatch");
  std::vector<double> out(f0_hz.size(), 0.0);
  for (size_t t = 0; t < f0_hz.size(); ++t)
    if (vuv[t]) {
      if (stats.f0_std_semitone <= 0.0) throw DataError("statistics carry a zero pitch deviation");
      out[t] = (hz_to_semitone(f0_hz[t]) - stats.f0_mean_semitone) / stats.f0_std_semitone;
    }
  return out;
}

namespace {

constexpr char kFeatMagic[8] = {'S', 'V', 'S', 'F', 'E', 'A', 'T', '1'};

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw IoError("truncated feature file");
  return v;
}

}  // namespace

void save_features(const std::string& path, const AcousticFeatures& f) {
  f.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create feature file: " + path);
  out.write(kFeatMagic, 8);
  put<uint32_t>(out, 1);
  put<uint32_t>(out, static_cast<uint32_t>(f.frames()));
  put<uint32_t>(out, static_cast<uint32_t>(f.mel.cols()));
  put<double>(out, f.sample_rate);
  put<double>(out, f.hop_seconds);
  put<double>(out, f.window_seconds);
  out.write(reinterpret_cast<const char*>(f.mel.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(f.mel.size())));
  out.write(reinterpret_cast<const char*>(f.f0_hz.data()),
            static_cast<std::streamsize>(sizeof(double) * f.f0_hz.size()));
  out.write(reinterpret_cast<const char*>(f.vuv.data()),
            static_cast<std::streamsize>(f.vuv.size()));
  if (!out) throw IoError("failed writing feature file: " + path);
}

AcousticFeatures load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kFeatMagic, 8) != 0)
    throw ParseError("not a feature file: " + path);
  uint32_t version = get<uint32_t>(in);
  if (version != 1) throw ParseError("unsupported feature file version");
  uint32_t T = get<uint32_t>(in);
  uint32_t n_mels = get<uint32_t>(in);
  AcousticFeatures f;
  f.sample_rate = get<double>(in);
  f.hop_seconds = get<double>(in);
  f.window_seconds = get<double>(in);
  f.mel = Tensor({static_cast<int64_t>(T), static_cast<int64_t>(n_mels)});
  in.read(reinterpret_cast<char*>(f.mel.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(f.mel.size())));
  f.f0_hz.resize(T);
  in.read(reinterpret_cast<char*>(f.f0_hz.data()),
          static_cast<std::streamsize>(sizeof(double) * f.f0_hz.size()));
  f.vuv.resize(T);
  in.read(reinterpret_cast<char*>(f.vuv.data()), static_cast<std::streamsize>(f.vuv.size()));
  if (!in) throw IoError("truncated feature file: " + path);
  f.validate();
  return f;
}

void save_norm_stats(const std::string& path, const NormStats& stats) {
  nlohmann::json j;
  j["mel_mean"] = stats.mel_mean;
  j["mel_std"] = stats.mel_std;
  j["f0_mean_semitone"] = stats.f0_mean_semitone;
  j["f0_std_semitone"] = stats.f0_std_semitone;
  j["voiced_frames"] = stats.voiced_frames;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create stats file: " + path);
  out << j.dump(2) << "\n";
}

NormStats load_norm_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stats file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    NormStats s;
    s.mel_mean = j.at("mel_mean").get<std::vector<double>>();
    s.mel_std = j.at("mel_std").get<std::vector<double>>();
    s.f0_mean_semitone = j.at("f0_mean_semitone").get<double>();
    s.f0_std_semitone = j.at("f0_std_semitone").get<double>();
    s.voiced_frames = j.at("voiced_frames").get<int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stats JSON: ") + e.what());
  }
}

}  // namespace svs
