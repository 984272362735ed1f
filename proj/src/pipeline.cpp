#include "svs/pipeline.h"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include "json.hpp"
#include "svs/autodiff.h"
#include "svs/checkpoint.h"
#include "svs/config_json.h"
#include "svs/errors.h"

namespace svs {

using nlohmann::json;

namespace {

json parse_meta(const Snapshot& snap) {
  try {
    return json::parse(snap.meta_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("snapshot: bad metadata: ") + e.what());
  }
}

// Copies the generator-side tensors of a snapshot into a freshly built
// parameter store; names are structural, so any same-config model matches.
void restore_generator(const Snapshot& snap, ParamStore& params) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : snap.tensors) by_name.emplace(name, &t);
  for (const auto& [name, var] : params.items()) {
    auto it = by_name.find("g." + name);
    if (it == by_name.end()) throw DataError("snapshot: missing tensor g." + name);
    if (!it->second->same_shape(var->value))
      throw DataError("snapshot: shape mismatch for g." + name);
    var->value = *it->second;
  }
}

}  // namespace

AcousticInference::AcousticInference(const std::string& snapshot_path) {
  Snapshot snap = load_snapshot(snapshot_path);
  json meta = parse_meta(snap);
  if (meta.value("kind", "") != "acoustic")
    throw DataError("snapshot: not an acoustic-stage snapshot");
  config_from_json(meta.at("model"), cfg_);
  stats_ = stats_from_json(meta.at("stats"));
  vocab_ = meta.at("phoneme_vocab").get<int64_t>();
  Rng rng(0);  // initial values are overwritten below
  model_ = std::make_unique<AcousticModel>(cfg_, vocab_, params_, rng);
  restore_generator(snap, params_);
}

AcousticOutput AcousticInference::infer(const ScoreSequence& seq) const {
  return model_->infer(seq);
}

AcousticOutput AcousticInference::forward(const ScoreSequence& seq,
                                          const std::vector<int64_t>& durations) const {
  Rng rng(0);  // unused: evaluation mode draws nothing
  return model_->forward(seq, durations, false, rng);
}

VocoderInference::VocoderInference(const std::string& snapshot_path) {
  Snapshot snap = load_snapshot(snapshot_path);
  json meta = parse_meta(snap);
  if (meta.value("kind", "") != "vocoder")
    throw DataError("snapshot: not a vocoder-stage snapshot");
  config_from_json(meta.at("model"), cfg_);
  Rng rng(0);
  up_ = std::make_unique<ConditioningUpsampler>(params_, "up", cfg_, rng);
  gen_ = std::make_unique<VocoderGenerator>(cfg_, params_, rng);
  restore_generator(snap, params_);
}

std::vector<double> VocoderInference::generate(const Tensor& cond_frames, Rng noise_rng,
                                               int64_t chunk_frames) const {
  validate_conditioning(cond_frames, cfg_.n_mels);
  if (chunk_frames < 1) throw ContractError("generate: chunk_frames must be positive");
  Var up = up_->upsample(make_constant(cond_frames));
  const int64_t length = up->value.rows();
  Tensor noise({length, 1});
  for (int64_t i = 0; i < length; ++i) noise.data()[i] = noise_rng.normal();
  Tensor wave = gen_->generate_chunked(noise, up->value, chunk_frames * cfg_.hop_samples);
  std::vector<double> out(static_cast<size_t>(length));
  std::memcpy(out.data(), wave.data(), static_cast<size_t>(length) * sizeof(double));
  return out;
}

Tensor conditioning_from_acoustic(const AcousticOutput& out, const NormStats& stats) {
  const int64_t frames = out.mel->value.rows();
  const int64_t n_mels = out.mel->value.cols();
  if (out.f0_semitone->value.rows() != frames || out.vuv_logit->value.rows() != frames)
    throw ContractError("conditioning: acoustic heads disagree on frame count");
  Tensor cond({frames, n_mels + 2});
  for (int64_t t = 0; t < frames; ++t) {
    double* row = cond.data() + t * (n_mels + 2);
    std::memcpy(row, out.mel->value.data() + t * n_mels,
                static_cast<size_t>(n_mels) * sizeof(double));
    const bool voiced = out.vuv_logit->value.data()[t] > 0.0;
    row[n_mels] = voiced ? (out.f0_semitone->value.data()[t] - stats.f0_mean_semitone) /
                               stats.f0_std_semitone
                         : 0.0;
    row[n_mels + 1] = voiced ? 1.0 : 0.0;
  }
  return cond;
}

Waveform synthesize(const Score& score, const Lexicon& lexicon, const AcousticInference& acoustic,
                    const VocoderInference& vocoder, const SynthesisRequest& req) {
  if (acoustic.config().n_mels != vocoder.config().n_mels)
    throw ConfigError("synthesize: checkpoints disagree on mel bins");
  const int64_t hop = hop_samples(req.hop_seconds, req.sample_rate);
  if (hop != vocoder.config().hop_samples)
    throw ConfigError("synthesize: vocoder hop does not match the requested frame rate");

  ScoreSequence seq = encode_score(score, lexicon, req.hop_seconds);
  AcousticOutput out = acoustic.infer(seq);
  Tensor cond = conditioning_from_acoustic(out, acoustic.stats());
  Waveform wave;
  wave.sample_rate = req.sample_rate;
  wave.samples =
      vocoder.generate(cond, Rng(req.seed).fork("synthesis-noise"), req.chunk_frames);
  return wave;
}

EvalMetrics evaluate_features(const AcousticFeatures& pred, const AcousticFeatures& ref) {
  pred.validate();
  ref.validate();
  if (pred.mel.cols() != ref.mel.cols())
    throw ContractError("evaluate: mel bin counts disagree");
  const int64_t frames = std::min(pred.frames(), ref.frames());
  if (frames == 0) throw DataError("evaluate: no overlapping frames");
  const int64_t n_mels = ref.mel.cols();

  EvalMetrics m;
  double sc_num = 0.0, sc_den = 0.0;
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t b = 0; b < n_mels; ++b) {
      const double p = pred.mel.data()[t * n_mels + b];
      const double r = ref.mel.data()[t * n_mels + b];
      m.mel_l1 += std::abs(p - r);
      const double dp = std::exp(p), dr = std::exp(r);
      sc_num += (dr - dp) * (dr - dp);
      sc_den += dr * dr;
    }
  m.mel_l1 /= static_cast<double>(frames * n_mels);
  m.spectral_convergence = std::sqrt(sc_num) / std::max(std::sqrt(sc_den), 1e-12);

  int64_t voiced_overlap = 0, flipped = 0;
  double cents_sq = 0.0;
  for (int64_t t = 0; t < frames; ++t) {
    const bool pv = pred.vuv[static_cast<size_t>(t)] != 0;
    const bool rv = ref.vuv[static_cast<size_t>(t)] != 0;
    if (pv != rv) ++flipped;
    if (pv && rv) {
      ++voiced_overlap;
      const double cents = 100.0 * (hz_to_semitone(pred.f0_hz[static_cast<size_t>(t)]) -
                                    hz_to_semitone(ref.f0_hz[static_cast<size_t>(t)]));
      cents_sq += cents * cents;
    }
  }
  m.vuv_error_rate = static_cast<double>(flipped) / static_cast<double>(frames);
  if (voiced_overlap > 0) m.f0_rmse_cents = std::sqrt(cents_sq / static_cast<double>(voiced_overlap));
  return m;
}

EvalMetrics evaluate_waveforms(const Waveform& pred, const Waveform& ref,
                               const FeatureConfig& cfg) {
  if (pred.samples.empty() || ref.samples.empty()) throw DataError("evaluate: empty waveform");
  return evaluate_features(extract_features(pred, cfg), extract_features(ref, cfg));
}

EvalReport make_report(std::vector<EvalUtterance> utterances) {
  EvalReport report;
  report.utterances = std::move(utterances);
  if (report.utterances.empty()) return report;
  for (const EvalUtterance& u : report.utterances) {
    report.aggregate.mel_l1 += u.metrics.mel_l1;
    report.aggregate.f0_rmse_cents += u.metrics.f0_rmse_cents;
    report.aggregate.vuv_error_rate += u.metrics.vuv_error_rate;
    report.aggregate.spectral_convergence += u.metrics.spectral_convergence;
  }
  const double n = static_cast<double>(report.utterances.size());
  report.aggregate.mel_l1 /= n;
  report.aggregate.f0_rmse_cents /= n;
  report.aggregate.vuv_error_rate /= n;
  report.aggregate.spectral_convergence /= n;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  auto metrics_json = [](const EvalMetrics& m) {
    return json{{"mel_l1", m.mel_l1},
                {"f0_rmse_cents", m.f0_rmse_cents},
                {"vuv_error_rate", m.vuv_error_rate},
                {"spectral_convergence", m.spectral_convergence}};
  };
  json j;
  j["utterances"] = json::array();
  for (const EvalUtterance& u : report.utterances) {
    json ju = metrics_json(u.metrics);
    ju["name"] = u.name;
    ju["frames"] = u.frames;
    j["utterances"].push_back(std::move(ju));
  }
  j["aggregate"] = metrics_json(report.aggregate);
  return j.dump(2);
}

AcousticTrainItem make_acoustic_item(const SyntheticUtterance& utt, const FeatureConfig& cfg) {
  AcousticTrainItem item;
  item.name = utt.name;
  item.seq = utt.seq;
  item.feats = extract_features(utt.wave, cfg);
  validate_acoustic_item(item);
  return item;
}

VocoderTrainItem make_vocoder_item(const SyntheticUtterance& utt, const FeatureConfig& cfg,
                                   const NormStats& stats) {
  VocoderTrainItem item;
  item.name = utt.name;
  AcousticFeatures feats = extract_features(utt.wave, cfg);
  item.cond = build_conditioning(feats, stats);
  item.samples = Tensor({static_cast<int64_t>(utt.wave.samples.size()), 1});
  std::memcpy(item.samples.data(), utt.wave.samples.data(),
              utt.wave.samples.size() * sizeof(double));
  return item;
}

}  // namespace svs
