#include "svs/vocoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "svs/errors.h"

namespace svs {

void VocoderConfig::validate() const {
  if (n_layers_per_stack < 1 || n_stacks < 1) throw ConfigError("vocoder: need at least one layer");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("vocoder: kernel must be odd");
  if (residual_channels < 1 || skip_channels < 1) throw ConfigError("vocoder: bad channel count");
  if (gate_channels < 2 || gate_channels % 2 != 0)
    throw ConfigError("vocoder: gate channels must split into two equal halves");
  if (hop_samples < 1) throw ConfigError("vocoder: bad hop");
  if (n_mels < 1) throw ConfigError("vocoder: bad mel count");
  if (upsample_factors.empty()) throw ConfigError("vocoder: no upsample factors");
  int64_t prod = 1;
  for (int64_t f : upsample_factors) {
    if (f < 1) throw ConfigError("vocoder: upsample factors must be positive");
    prod *= f;
  }
  if (prod != hop_samples)
    throw ConfigError("vocoder: upsample factors multiply to " + std::to_string(prod) +
                      ", expected hop " + std::to_string(hop_samples));
}

std::vector<int64_t> VocoderConfig::dilations() const {
  std::vector<int64_t> d(static_cast<size_t>(n_layers_per_stack));
  for (size_t l = 0; l < d.size(); ++l) d[l] = int64_t{1} << l;
  return d;
}

int64_t VocoderConfig::receptive_field() const {
  int64_t sum = 0;
  for (int64_t d : dilations()) sum += d;
  return 1 + n_stacks * (kernel - 1) * sum;
}

Tensor build_conditioning(const AcousticFeatures& feats, const NormStats& stats) {
  const int64_t T = feats.frames();
  const int64_t n_mels = feats.mel.cols();
  if (static_cast<int64_t>(feats.f0_hz.size()) != T ||
      static_cast<int64_t>(feats.vuv.size()) != T)
    throw ContractError("conditioning: mel, pitch, and voicing lengths disagree");
  Tensor mel = normalize_mel(feats.mel, stats);
  std::vector<double> f0 = normalize_f0(feats.f0_hz, feats.vuv, stats);
  Tensor cond({T, n_mels + 2});
  for (int64_t t = 0; t < T; ++t) {
    double* row = cond.data() + t * (n_mels + 2);
    std::memcpy(row, mel.data() + t * n_mels, static_cast<size_t>(n_mels) * sizeof(double));
    row[n_mels] = f0[static_cast<size_t>(t)];
    row[n_mels + 1] = feats.vuv[static_cast<size_t>(t)] ? 1.0 : 0.0;
  }
  return cond;
}

void validate_conditioning(const Tensor& cond, int64_t n_mels) {
  if (cond.rank() != 2 || cond.cols() != n_mels + 2)
    throw ContractError("conditioning: expected [T, n_mels + 2]");
  for (int64_t t = 0; t < cond.rows(); ++t) {
    const double* row = cond.data() + t * cond.cols();
    for (int64_t c = 0; c < cond.cols(); ++c)
      if (!std::isfinite(row[c])) throw DataError("conditioning: non-finite value");
    double v = row[n_mels + 1];
    if (v != 0.0 && v != 1.0) throw DataError("conditioning: voicing flag must be 0 or 1");
  }
}

ConditioningUpsampler::ConditioningUpsampler(ParamStore& params, const std::string& name,
                                             const VocoderConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const int64_t ch = cfg_.aux_dims() - 1;  // all but the voicing flag
  for (size_t i = 0; i < cfg_.upsample_factors.size(); ++i) {
    int64_t s = cfg_.upsample_factors[i];
    // Kernel 3s with padding s turns T rows into exactly s*T:
    // (T-1)*s + 3s - 2s = s*T.
    stages_.push_back(ConvTranspose1d::create(params, name + ".up" + std::to_string(i), ch, ch,
                                              3 * s, s, s, rng));
  }
}

Var ConditioningUpsampler::upsample(const Var& cond_frames) const {
  const int64_t T = cond_frames->value.rows();
  const int64_t aux = cfg_.aux_dims();
  if (cond_frames->value.rank() != 2 || cond_frames->value.cols() != aux)
    throw ContractError("upsample: expected [T, n_mels + 2] conditioning");
  if (T < 1) throw ContractError("upsample: empty conditioning");

  Var cont = col_slice(cond_frames, 0, aux - 1);
  for (size_t i = 0; i < stages_.size(); ++i) {
    cont = stages_[i](cont);
    if (i + 1 < stages_.size()) cont = leaky_relu(cont, 0.2);
  }

  // The voicing flag is categorical: repeat each frame's value across its
  // hop span so the boundary stays a step, not a learned ramp.
  std::vector<int64_t> ids(static_cast<size_t>(T * cfg_.hop_samples));
  for (int64_t i = 0; i < T * cfg_.hop_samples; ++i) ids[static_cast<size_t>(i)] = i / cfg_.hop_samples;
  Var vuv = gather_rows(col_slice(cond_frames, aux - 1, aux), std::move(ids));

  Var out = concat_cols({cont, vuv});
  if (out->value.rows() != T * cfg_.hop_samples)
    throw ContractError("upsample: stage geometry broke the hop contract");
  return out;
}

VocoderGenerator::VocoderGenerator(const VocoderConfig& cfg, ParamStore& params, Rng& rng)
    : cfg_(cfg) {
  cfg_.validate();
  const int64_t res = cfg_.residual_channels;
  const int64_t gate = cfg_.gate_channels;
  const int64_t half = gate / 2;
  const int64_t skip = cfg_.skip_channels;
  input_ = Conv1d::create(params, "voc.in", 1, res, 1, 1, rng);
  const std::vector<int64_t> dil = cfg_.dilations();
  for (int64_t s = 0; s < cfg_.n_stacks; ++s) {
    for (int64_t l = 0; l < cfg_.n_layers_per_stack; ++l) {
      std::string base = "voc.s" + std::to_string(s) + "l" + std::to_string(l);
      Layer layer{
          Conv1d::create(params, base + ".dil", res, gate, cfg_.kernel, dil[static_cast<size_t>(l)],
                         rng),
          Conv1d::create(params, base + ".cond", cfg_.aux_dims(), gate, 1, 1, rng),
          Conv1d::create(params, base + ".skip", half, skip, 1, 1, rng),
          Conv1d::create(params, base + ".res", half, res, 1, 1, rng),
      };
      layers_.push_back(std::move(layer));
    }
  }
  post1_ = Conv1d::create(params, "voc.post1", skip, skip, 1, 1, rng);
  post2_ = Conv1d::create(params, "voc.post2", skip, 1, 1, 1, rng);
}

Var VocoderGenerator::forward(const Var& noise, const Var& cond_upsampled) const {
  const Tensor& nv = noise->value;
  const Tensor& cv = cond_upsampled->value;
  if (nv.rank() != 2 || nv.cols() != 1) throw ContractError("vocoder: noise must be [L, 1]");
  if (cv.rank() != 2 || cv.cols() != cfg_.aux_dims())
    throw ContractError("vocoder: conditioning must be [L, n_mels + 2]");
  if (nv.rows() != cv.rows())
    throw ContractError("vocoder: noise and conditioning lengths disagree");

  const int64_t half = cfg_.gate_channels / 2;
  Var x = input_(noise);
  std::vector<Var> skips;
  skips.reserve(layers_.size());
  for (const Layer& layer : layers_) {
    Var h = add(layer.dilated(x), layer.cond(cond_upsampled));
    Var z = mul(tanh_v(col_slice(h, 0, half)), sigmoid_v(col_slice(h, half, 2 * half)));
    skips.push_back(layer.skip(z));
    // sqrt(1/2) keeps the residual stream's variance flat across depth.
    x = scale(add(x, layer.res(z)), M_SQRT1_2);
  }
  Var s = scale(add_n(skips), std::sqrt(1.0 / static_cast<double>(layers_.size())));
  return tanh_v(post2_(relu(post1_(relu(s)))));
}

Tensor VocoderGenerator::generate_chunked(const Tensor& noise, const Tensor& cond_upsampled,
                                          int64_t chunk_samples) const {
  if (chunk_samples < 1) throw ConfigError("vocoder: chunk size must be positive");
  if (noise.rank() != 2 || noise.cols() != 1 || cond_upsampled.rank() != 2 ||
      cond_upsampled.rows() != noise.rows())
    throw ContractError("vocoder: chunked generation input shapes disagree");
  const int64_t L = noise.rows();
  const int64_t aux = cond_upsampled.cols();
  const int64_t margin = (receptive_field() - 1) / 2;
  Tensor out({L, 1});
  for (int64_t start = 0; start < L; start += chunk_samples) {
    const int64_t stop = std::min(L, start + chunk_samples);
    const int64_t lo = std::max<int64_t>(0, start - margin);
    const int64_t hi = std::min(L, stop + margin);
    Tensor n_slice({hi - lo, 1});
    Tensor c_slice({hi - lo, aux});
    std::memcpy(n_slice.data(), noise.data() + lo, static_cast<size_t>(hi - lo) * sizeof(double));
    std::memcpy(c_slice.data(), cond_upsampled.data() + lo * aux,
                static_cast<size_t>((hi - lo) * aux) * sizeof(double));
    Var y = forward(make_constant(std::move(n_slice)), make_constant(std::move(c_slice)));
    std::memcpy(out.data() + start, y->value.data() + (start - lo),
                static_cast<size_t>(stop - start) * sizeof(double));
  }
  return out;
}

std::vector<StftResolution> default_stft_resolutions() {
  return {{1024, 120, 600}, {2048, 240, 1200}, {512, 50, 240}};
}

namespace {

std::vector<double> periodic_hann(int64_t win) {
  std::vector<double> w(static_cast<size_t>(win));
  for (int64_t j = 0; j < win; ++j)
    w[static_cast<size_t>(j)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * j / static_cast<double>(win)));
  return w;
}

}  // namespace

Var multires_stft_loss(const Var& pred, const Tensor& target,
                       const std::vector<StftResolution>& resolutions) {
  if (resolutions.empty()) throw ConfigError("stft loss: no resolutions");
  if (pred->value.size() != target.size())
    throw ContractError("stft loss: prediction and target lengths disagree");
  std::vector<Var> terms;
  Var ref = make_constant(target);
  for (const StftResolution& r : resolutions) {
    std::vector<double> w = periodic_hann(r.win);
    Var mp = stft_mag(pred, r.n_fft, r.hop, w);
    Var mt = stft_mag(ref, r.n_fft, r.hop, w);
    double ref_norm = 0.0;
    for (int64_t i = 0; i < mt->value.size(); ++i) ref_norm += mt->value[i] * mt->value[i];
    ref_norm = std::sqrt(ref_norm);
    Var sc = scale(sqrt_v(sum(square(sub(mt, mp)))), 1.0 / std::max(ref_norm, 1e-12));
    Var lm = mean(abs_v(sub(log_v(add_const(mt, 1e-7)), log_v(add_const(mp, 1e-7)))));
    terms.push_back(add(sc, lm));
  }
  Var total = terms.size() == 1 ? terms[0] : add_n(terms);
  return scale(total, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace svs
