#include "svs/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "json.hpp"
#include "svs/checkpoint.h"
#include "svs/config_json.h"
#include "svs/errors.h"

namespace svs {

using nlohmann::json;

Adam::Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Var& p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    // A parameter outside this step's graph keeps both its value and its
    // moments; momentum must not keep pushing it.
    if (p->grad.size() != p->value.size()) continue;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < p->value.size(); ++j) {
      const double g = p->grad[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      p->value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
    }
  }
}

RAdam::RAdam(std::vector<Var> params, RAdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Var& p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void RAdam::step(double lr) {
  ++t_;
  const double t = static_cast<double>(t_);
  const double b2t = std::pow(cfg_.beta2, t);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - b2t;
  const double rho_inf = 2.0 / (1.0 - cfg_.beta2) - 1.0;
  const double rho = rho_inf - 2.0 * t * b2t / bc2;
  double rect = 0.0;
  const bool adaptive = rho > 4.0;
  if (adaptive)
    rect = std::sqrt(((rho - 4.0) * (rho - 2.0) * rho_inf) /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
  for (size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i];
    if (p->grad.size() != p->value.size()) continue;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < p->value.size(); ++j) {
      const double g = p->grad[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      if (adaptive)
        p->value[j] -= lr * rect * mhat / (std::sqrt(v[j] / bc2) + cfg_.eps);
      else
        p->value[j] -= lr * mhat;
    }
  }
}

double clip_global_norm(const std::vector<Var>& params, double max_norm) {
  if (max_norm <= 0.0) throw ConfigError("clip: max norm must be positive");
  double sq = 0.0;
  for (const Var& p : params) {
    if (p->grad.size() != p->value.size()) continue;
    for (int64_t j = 0; j < p->grad.size(); ++j) sq += p->grad[j] * p->grad[j];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const Var& p : params) {
      if (p->grad.size() != p->value.size()) continue;
      for (int64_t j = 0; j < p->grad.size(); ++j) p->grad[j] *= s;
    }
  }
  return norm;
}

void AcousticTrainSpec::validate() const {
  if (steps < 1 || batch < 1) throw ConfigError("train spec: steps and batch must be positive");
  if (d_model < 1 || warmup_steps < 1) throw ConfigError("train spec: bad schedule");
  if (adv_start_step < 0 || adv_start_step >= steps)
    throw ConfigError("train spec: adversarial start must fall inside the run");
  if (lambda_adv < 0.0) throw ConfigError("train spec: negative adversarial weight");
  if (grad_clip <= 0.0) throw ConfigError("train spec: gradient clip must be positive");
  if (window_min_frames < 1 || window_max_frames < window_min_frames)
    throw ConfigError("train spec: bad discriminator window bounds");
  if (checkpoint_every < 1) throw ConfigError("train spec: bad checkpoint cadence");
}

void VocoderTrainSpec::validate() const {
  if (steps < 1 || batch < 1) throw ConfigError("train spec: steps and batch must be positive");
  if (lr0 <= 0.0 || halve_every < 1) throw ConfigError("train spec: bad schedule");
  if (adv_start_step < 0 || adv_start_step >= steps)
    throw ConfigError("train spec: adversarial start must fall inside the run");
  if (lambda_adv < 0.0) throw ConfigError("train spec: negative adversarial weight");
  if (grad_clip <= 0.0) throw ConfigError("train spec: gradient clip must be positive");
  if (crop_frames < 1) throw ConfigError("train spec: bad crop length");
  if (checkpoint_every < 1) throw ConfigError("train spec: bad checkpoint cadence");
  if (stft_resolutions.empty()) throw ConfigError("train spec: no spectral loss resolutions");
  crops.validate();
}

double lr_at_step(const AcousticTrainSpec& spec, int64_t step) {
  if (step < 0) throw DomainError("lr: negative step");
  if (step == 0) return 0.0;  // the linear ramp starts at zero
  const double s = static_cast<double>(step);
  const double ramp = s * std::pow(static_cast<double>(spec.warmup_steps), -1.5);
  const double decay = 1.0 / std::sqrt(s);
  return std::min(ramp, decay) / std::sqrt(static_cast<double>(spec.d_model));
}

double lr_at_step(const VocoderTrainSpec& spec, int64_t step) {
  if (step < 0) throw DomainError("lr: negative step");
  return spec.lr0 * std::pow(0.5, static_cast<double>(step / spec.halve_every));
}

bool adversarial_gate(int64_t adv_start_step, int64_t step) { return step >= adv_start_step; }

void validate_acoustic_item(const AcousticTrainItem& item) {
  const size_t n = item.seq.phoneme_ids.size();
  if (n == 0 || item.seq.pitch_ids.size() != n || item.seq.duration_frames.size() != n)
    throw DataError("utterance " + item.name + ": malformed score sequence");
  int64_t total = 0;
  for (int64_t d : item.seq.duration_frames) {
    if (d < 1) throw DataError("utterance " + item.name + ": non-positive duration");
    total += d;
  }
  const int64_t T = item.feats.frames();
  if (total != T)
    throw DataError("utterance " + item.name + ": durations cover " + std::to_string(total) +
                    " frames but features have " + std::to_string(T));
  if (static_cast<int64_t>(item.feats.f0_hz.size()) != T ||
      static_cast<int64_t>(item.feats.vuv.size()) != T)
    throw DataError("utterance " + item.name + ": feature tracks disagree in length");
}

void validate_vocoder_item(const VocoderTrainItem& item, int64_t hop_samples, int64_t aux_dims) {
  if (item.cond.rank() != 2 || item.cond.cols() != aux_dims || item.cond.rows() < 1)
    throw DataError("utterance " + item.name + ": malformed conditioning");
  if (item.samples.rank() != 2 || item.samples.cols() != 1)
    throw DataError("utterance " + item.name + ": waveform must be [L, 1]");
  if (item.samples.rows() != item.cond.rows() * hop_samples)
    throw DataError("utterance " + item.name + ": waveform has " +
                    std::to_string(item.samples.rows()) + " samples, conditioning covers " +
                    std::to_string(item.cond.rows() * hop_samples));
}

std::string metrics_json_line(const TrainMetrics& m) {
  json j;
  j["step"] = m.step;
  j["lr"] = m.lr;
  j["total"] = m.total;
  j["mel_l1"] = m.mel_l1;
  j["f0"] = m.f0;
  j["vuv"] = m.vuv;
  j["dur"] = m.dur;
  j["stft"] = m.stft;
  j["adv_g"] = m.adv_g;
  j["adv_d"] = m.adv_d;
  j["grad_norm"] = m.grad_norm;
  j["disc_grad_norm"] = m.disc_grad_norm;
  j["ema_total"] = m.ema_total;
  j["gate"] = m.gate_on;
  return j.dump();
}

namespace {

void append_params(Snapshot& snap, const std::string& prefix, const ParamStore& ps) {
  for (const auto& [name, var] : ps.items()) snap.tensors.emplace_back(prefix + name, var->value);
}

void append_moments(Snapshot& snap, const std::string& prefix, const ParamStore& ps,
                    std::vector<Tensor>& moments) {
  for (size_t i = 0; i < ps.items().size(); ++i)
    snap.tensors.emplace_back(prefix + ps.items()[i].first, moments[i]);
}

class TensorMap {
 public:
  explicit TensorMap(const Snapshot& snap) {
    for (const auto& [name, t] : snap.tensors) map_.emplace(name, &t);
  }
  const Tensor& at(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw DataError("checkpoint: missing tensor " + name);
    return *it->second;
  }

 private:
  std::unordered_map<std::string, const Tensor*> map_;
};

void restore_params(const TensorMap& tensors, const std::string& prefix, ParamStore& ps) {
  for (const auto& [name, var] : ps.items()) {
    const Tensor& t = tensors.at(prefix + name);
    if (t.shape() != var->value.shape())
      throw DataError("checkpoint: tensor " + name + " has the wrong shape");
    var->value = t;
  }
}

void restore_moments(const TensorMap& tensors, const std::string& prefix, const ParamStore& ps,
                     std::vector<Tensor>& moments) {
  for (size_t i = 0; i < ps.items().size(); ++i) {
    const Tensor& t = tensors.at(prefix + ps.items()[i].first);
    if (t.shape() != moments[i].shape())
      throw DataError("checkpoint: moment " + ps.items()[i].first + " has the wrong shape");
    moments[i] = t;
  }
}

double scalar(const Var& v) { return v->value[0]; }

}  // namespace

AcousticTrainer::AcousticTrainer(const AcousticModelConfig& mcfg, int64_t phoneme_vocab,
                                 const AcousticTrainSpec& spec, const NormStats& stats)
    : mcfg_(mcfg), spec_(spec), stats_(stats), vocab_(phoneme_vocab) {
  mcfg_.validate();
  spec_.validate();
  if (static_cast<int64_t>(stats_.mel_mean.size()) != mcfg_.n_mels ||
      static_cast<int64_t>(stats_.mel_std.size()) != mcfg_.n_mels)
    throw ConfigError("trainer: normalization statistics do not cover the mel bins");

  Rng init = Rng(spec_.seed).fork("acoustic-init");
  model_ = std::make_unique<AcousticModel>(mcfg_, vocab_, g_params_, init);

  bands_ = SubBandSpec::three_band(mcfg_.n_mels);
  bands_.validate(mcfg_.n_mels);
  SFDiscriminatorConfig dcfg;
  dcfg.min_window_frames = spec_.window_min_frames;
  dcfg.max_window_frames = spec_.window_max_frames;
  dcfg.validate();
  for (size_t b = 0; b < bands_.bands.size(); ++b) {
    const auto& [lo, hi] = bands_.bands[b];
    discs_.push_back(std::make_unique<SFDiscriminator>(d_params_, "sfd" + std::to_string(b),
                                                       hi - lo, dcfg, init));
  }

  g_opt_ = Adam(g_params_.vars(), spec_.adam);
  d_opt_ = Adam(d_params_.vars(), spec_.adam);
  rng_ = Rng(spec_.seed).fork("acoustic-train");
}

TrainMetrics AcousticTrainer::step(const std::vector<AcousticTrainItem>& corpus) {
  if (corpus.empty()) throw DataError("trainer: empty corpus");
  const int64_t idx = step_;  // completed steps so far
  const bool gate = adversarial_gate(spec_.adv_start_step, idx);
  const double lr = lr_at_step(spec_, idx + 1);  // warm-up schedule counts from 1

  std::vector<int64_t> picks(static_cast<size_t>(spec_.batch));
  for (int64_t i = 0; i < spec_.batch; ++i)
    picks[static_cast<size_t>(i)] = rng_.uniform_int(0, static_cast<int64_t>(corpus.size()) - 1);

  TrainMetrics m;
  m.gate_on = gate;
  m.lr = lr;

  // Generator update.  Frozen discriminators still score, but collect no
  // gradient of their own.
  g_params_.zero_grads();
  d_params_.freeze(true);
  std::vector<Var> item_losses;
  std::vector<Tensor> fake_mels(picks.size());
  const double inv_batch = 1.0 / static_cast<double>(spec_.batch);
  for (size_t i = 0; i < picks.size(); ++i) {
    const AcousticTrainItem& item = corpus[static_cast<size_t>(picks[i])];
    validate_acoustic_item(item);
    Tensor mel_target = normalize_mel(item.feats.mel, stats_);
    AcousticOutput out = model_->forward(item.seq, item.seq.duration_frames, true, rng_);
    AcousticLoss al = reconstruction_loss(out.mel, out.f0_semitone, out.vuv_logit, out.dur_log,
                                          mel_target, item.feats.f0_hz, item.feats.vuv,
                                          item.seq.duration_frames);
    m.mel_l1 += scalar(al.mel_l1) * inv_batch;
    m.f0 += scalar(al.f0_l2) * inv_batch;
    m.vuv += scalar(al.vuv_bce) * inv_batch;
    m.dur += scalar(al.dur_mse) * inv_batch;

    Var item_loss = al.total;
    if (gate) {
      FrameWindow w = sample_window(out.mel->value.rows(), spec_.window_min_frames,
                                    spec_.window_max_frames, rng_);
      Var window = row_slice(out.mel, w.start, w.start + w.length);
      std::vector<Var> scores;
      for (size_t b = 0; b < discs_.size(); ++b) {
        const auto& [lo, hi] = bands_.bands[b];
        scores.push_back(discs_[b]->score(col_slice(window, lo, hi)));
      }
      Var adv = sf_generator_loss(scores, bands_);
      m.adv_g += scalar(adv) * inv_batch;
      item_loss = add(item_loss, scale(adv, spec_.lambda_adv));
      fake_mels[i] = out.mel->value;
    }
    item_losses.push_back(item_loss);
  }
  Var g_loss = scale(add_n(item_losses), inv_batch);
  m.total = scalar(g_loss);
  backward(g_loss);
  d_params_.freeze(false);
  m.grad_norm = clip_global_norm(g_params_.vars(), spec_.grad_clip);
  g_opt_.step(lr);

  // Discriminator update on the same minibatch, fakes detached.
  if (gate) {
    d_params_.zero_grads();
    std::vector<Var> d_losses;
    for (size_t i = 0; i < picks.size(); ++i) {
      const AcousticTrainItem& item = corpus[static_cast<size_t>(picks[i])];
      Tensor real = normalize_mel(item.feats.mel, stats_);
      FrameWindow w =
          sample_window(real.rows(), spec_.window_min_frames, spec_.window_max_frames, rng_);
      Var real_win = row_slice(make_constant(real), w.start, w.start + w.length);
      Var fake_win = row_slice(make_constant(fake_mels[i]), w.start, w.start + w.length);
      std::vector<Var> real_scores, fake_scores;
      for (size_t b = 0; b < discs_.size(); ++b) {
        const auto& [lo, hi] = bands_.bands[b];
        real_scores.push_back(discs_[b]->score(col_slice(real_win, lo, hi)));
        fake_scores.push_back(discs_[b]->score(col_slice(fake_win, lo, hi)));
      }
      for (Var& l : sf_discriminator_losses(real_scores, fake_scores)) d_losses.push_back(l);
    }
    Var d_loss = scale(add_n(d_losses), inv_batch);
    m.adv_d = scalar(d_loss);
    backward(d_loss);
    m.disc_grad_norm = clip_global_norm(d_params_.vars(), spec_.grad_clip);
    d_opt_.step(lr);
  }

  step_ = idx + 1;
  ema_ = step_ == 1 ? m.total : 0.99 * ema_ + 0.01 * m.total;
  m.ema_total = ema_;
  m.step = step_;
  return m;
}

void AcousticTrainer::save(const std::string& path) const {
  json meta;
  meta["kind"] = "acoustic";
  meta["version"] = 1;
  meta["step"] = step_;
  meta["ema_total"] = ema_;
  meta["rng"] = {{"key", rng_.key()}, {"counter", rng_.counter()}};
  meta["g_opt_steps"] = g_opt_.steps_taken();
  meta["d_opt_steps"] = d_opt_.steps_taken();
  meta["phoneme_vocab"] = vocab_;
  meta["model"] = config_to_json(mcfg_);
  meta["spec"] = config_to_json(spec_);
  meta["stats"] = stats_to_json(stats_);

  Snapshot snap;
  snap.meta_json = meta.dump();
  append_params(snap, "g.", g_params_);
  append_params(snap, "d.", d_params_);
  Adam& g = const_cast<Adam&>(g_opt_);
  Adam& d = const_cast<Adam&>(d_opt_);
  append_moments(snap, "gm.", g_params_, g.first_moments());
  append_moments(snap, "gv.", g_params_, g.second_moments());
  append_moments(snap, "dm.", d_params_, d.first_moments());
  append_moments(snap, "dv.", d_params_, d.second_moments());
  save_snapshot(path, snap);
}

void AcousticTrainer::load(const std::string& path) {
  Snapshot snap = load_snapshot(path);
  json meta;
  try {
    meta = json::parse(snap.meta_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  if (meta.value("kind", "") != "acoustic")
    throw DataError("checkpoint: not an acoustic-stage snapshot");
  if (meta.at("model") != config_to_json(mcfg_) ||
      meta.at("spec") != config_to_json(spec_) || meta.at("stats") != stats_to_json(stats_) ||
      meta.at("phoneme_vocab").get<int64_t>() != vocab_)
    throw DataError("checkpoint: written for a different configuration");

  TensorMap tensors(snap);
  restore_params(tensors, "g.", g_params_);
  restore_params(tensors, "d.", d_params_);
  restore_moments(tensors, "gm.", g_params_, g_opt_.first_moments());
  restore_moments(tensors, "gv.", g_params_, g_opt_.second_moments());
  restore_moments(tensors, "dm.", d_params_, d_opt_.first_moments());
  restore_moments(tensors, "dv.", d_params_, d_opt_.second_moments());
  g_opt_.set_steps_taken(meta.at("g_opt_steps").get<int64_t>());
  d_opt_.set_steps_taken(meta.at("d_opt_steps").get<int64_t>());
  step_ = meta.at("step").get<int64_t>();
  ema_ = meta.at("ema_total").get<double>();
  rng_ = Rng::from_state(meta.at("rng").at("key").get<uint64_t>(),
                         meta.at("rng").at("counter").get<uint64_t>());
}

VocoderTrainer::VocoderTrainer(const VocoderConfig& vcfg, const VocoderTrainSpec& spec)
    : vcfg_(vcfg), spec_(spec) {
  vcfg_.validate();
  spec_.validate();
  Rng init = Rng(spec_.seed).fork("vocoder-init");
  up_ = std::make_unique<ConditioningUpsampler>(g_params_, "up", vcfg_, init);
  gen_ = std::make_unique<VocoderGenerator>(vcfg_, g_params_, init);
  MLDiscriminatorConfig dcfg;
  dcfg.validate();
  for (size_t i = 0; i < spec_.crops.lengths_s.size(); ++i)
    discs_.push_back(
        std::make_unique<MLDiscriminator>(d_params_, "mld" + std::to_string(i), dcfg, init));
  g_opt_ = RAdam(g_params_.vars(), spec_.radam);
  d_opt_ = RAdam(d_params_.vars(), spec_.radam);
  rng_ = Rng(spec_.seed).fork("vocoder-train");
}

TrainMetrics VocoderTrainer::step(const std::vector<VocoderTrainItem>& corpus) {
  if (corpus.empty()) throw DataError("trainer: empty corpus");
  const int64_t idx = step_;
  const bool gate = adversarial_gate(spec_.adv_start_step, idx);
  const double lr = lr_at_step(spec_, idx);
  const int64_t hop = vcfg_.hop_samples;
  const int64_t aux = vcfg_.aux_dims();
  const std::vector<int64_t> crop_lengths = spec_.crops.lengths_samples();

  std::vector<int64_t> picks(static_cast<size_t>(spec_.batch));
  for (int64_t i = 0; i < spec_.batch; ++i)
    picks[static_cast<size_t>(i)] = rng_.uniform_int(0, static_cast<int64_t>(corpus.size()) - 1);

  TrainMetrics m;
  m.gate_on = gate;
  m.lr = lr;
  const double inv_batch = 1.0 / static_cast<double>(spec_.batch);

  g_params_.zero_grads();
  d_params_.freeze(true);
  std::vector<Var> item_losses;
  std::vector<Tensor> fake_waves(picks.size());
  std::vector<Tensor> real_waves(picks.size());
  for (size_t i = 0; i < picks.size(); ++i) {
    const VocoderTrainItem& item = corpus[static_cast<size_t>(picks[i])];
    validate_vocoder_item(item, hop, aux);
    const int64_t T = item.cond.rows();
    const int64_t c = std::min(spec_.crop_frames, T);
    const int64_t o = rng_.uniform_int(0, T - c);
    const int64_t L = c * hop;

    Tensor cond_crop({c, aux});
    std::memcpy(cond_crop.data(), item.cond.data() + o * aux,
                static_cast<size_t>(c * aux) * sizeof(double));
    Tensor target({L, 1});
    std::memcpy(target.data(), item.samples.data() + o * hop,
                static_cast<size_t>(L) * sizeof(double));
    Tensor noise({L, 1});
    for (int64_t j = 0; j < L; ++j) noise[j] = rng_.normal();

    Var wave = gen_->forward(make_constant(noise), up_->upsample(make_constant(cond_crop)));
    Var aux_loss = multires_stft_loss(wave, target, spec_.stft_resolutions);
    m.stft += scalar(aux_loss) * inv_batch;

    Var item_loss = aux_loss;
    if (gate) {
      std::vector<Var> scores;
      for (size_t d = 0; d < discs_.size(); ++d) {
        CropWindow cw = random_crop(L, crop_lengths[d], rng_);
        if (cw.skipped) continue;  // segment longer than the excerpt: sit out
        scores.push_back(discs_[d]->score(row_slice(wave, cw.start, cw.start + cw.length)));
      }
      if (!scores.empty()) {
        Var adv = ml_generator_loss(scores);
        m.adv_g += scalar(adv) * inv_batch;
        item_loss = add(item_loss, scale(adv, spec_.lambda_adv));
      }
      fake_waves[i] = wave->value;
      real_waves[i] = target;
    }
    item_losses.push_back(item_loss);
  }
  Var g_loss = scale(add_n(item_losses), inv_batch);
  m.total = scalar(g_loss);
  backward(g_loss);
  d_params_.freeze(false);
  m.grad_norm = clip_global_norm(g_params_.vars(), spec_.grad_clip);
  g_opt_.step(lr);

  if (gate) {
    d_params_.zero_grads();
    std::vector<Var> d_losses;
    for (size_t i = 0; i < picks.size(); ++i) {
      const int64_t L = fake_waves[i].rows();
      Var real = make_constant(real_waves[i]);
      Var fake = make_constant(fake_waves[i]);
      for (size_t d = 0; d < discs_.size(); ++d) {
        CropWindow cw = random_crop(L, crop_lengths[d], rng_);
        if (cw.skipped) continue;
        Var rs = discs_[d]->score(row_slice(real, cw.start, cw.start + cw.length));
        Var fs = discs_[d]->score(row_slice(fake, cw.start, cw.start + cw.length));
        d_losses.push_back(ml_discriminator_loss(rs, fs));
      }
    }
    if (!d_losses.empty()) {
      Var d_loss = scale(add_n(d_losses), inv_batch);
      m.adv_d = scalar(d_loss);
      backward(d_loss);
      m.disc_grad_norm = clip_global_norm(d_params_.vars(), spec_.grad_clip);
      d_opt_.step(lr);
    }
  }

  step_ = idx + 1;
  ema_ = step_ == 1 ? m.total : 0.99 * ema_ + 0.01 * m.total;
  m.ema_total = ema_;
  m.step = step_;
  return m;
}

void VocoderTrainer::save(const std::string& path) const {
  json meta;
  meta["kind"] = "vocoder";
  meta["version"] = 1;
  meta["step"] = step_;
  meta["ema_total"] = ema_;
  meta["rng"] = {{"key", rng_.key()}, {"counter", rng_.counter()}};
  meta["g_opt_steps"] = g_opt_.steps_taken();
  meta["d_opt_steps"] = d_opt_.steps_taken();
  meta["model"] = config_to_json(vcfg_);
  meta["spec"] = config_to_json(spec_);

  Snapshot snap;
  snap.meta_json = meta.dump();
  append_params(snap, "g.", g_params_);
  append_params(snap, "d.", d_params_);
  RAdam& g = const_cast<RAdam&>(g_opt_);
  RAdam& d = const_cast<RAdam&>(d_opt_);
  append_moments(snap, "gm.", g_params_, g.first_moments());
  append_moments(snap, "gv.", g_params_, g.second_moments());
  append_moments(snap, "dm.", d_params_, d.first_moments());
  append_moments(snap, "dv.", d_params_, d.second_moments());
  save_snapshot(path, snap);
}

void VocoderTrainer::load(const std::string& path) {
  Snapshot snap = load_snapshot(path);
  json meta;
  try {
    meta = json::parse(snap.meta_json);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  if (meta.value("kind", "") != "vocoder")
    throw DataError("checkpoint: not a vocoder-stage snapshot");
  if (meta.at("model") != config_to_json(vcfg_) || meta.at("spec") != config_to_json(spec_))
    throw DataError("checkpoint: written for a different configuration");

  TensorMap tensors(snap);
  restore_params(tensors, "g.", g_params_);
  restore_params(tensors, "d.", d_params_);
  restore_moments(tensors, "gm.", g_params_, g_opt_.first_moments());
  restore_moments(tensors, "gv.", g_params_, g_opt_.second_moments());
  restore_moments(tensors, "dm.", d_params_, d_opt_.first_moments());
  restore_moments(tensors, "dv.", d_params_, d_opt_.second_moments());
  g_opt_.set_steps_taken(meta.at("g_opt_steps").get<int64_t>());
  d_opt_.set_steps_taken(meta.at("d_opt_steps").get<int64_t>());
  step_ = meta.at("step").get<int64_t>();
  ema_ = meta.at("ema_total").get<double>();
  rng_ = Rng::from_state(meta.at("rng").at("key").get<uint64_t>(),
                         meta.at("rng").at("counter").get<uint64_t>());
}

}  // namespace svs
