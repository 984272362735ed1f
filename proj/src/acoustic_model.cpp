#include "svs/acoustic_model.h"

#include <cmath>

#include "svs/errors.h"

namespace svs {

void AcousticModelConfig::validate() const {
  if (n_encoder_blocks < 1 || n_decoder_blocks < 1 || hidden < 1 || conv_filter < 1 ||
      n_heads < 1 || n_mels < 1 || duration_buckets < 2)
    throw ConfigError("acoustic model sizes must be positive");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError("conv kernel must be odd");
  if (hidden % n_heads != 0) throw ConfigError("hidden size must divide evenly across heads");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

Var length_regulate(const Var& hiddens, const std::vector<int64_t>& durations) {
  if (hiddens->value.rank() != 2) throw ContractError("length regulator expects [N, H]");
  if (static_cast<int64_t>(durations.size()) != hiddens->value.rows())
    throw ContractError("one duration per hidden row required");
  std::vector<int64_t> ids;
  for (size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 1) throw DomainError("durations must be at least one frame");
    ids.insert(ids.end(), static_cast<size_t>(durations[i]), static_cast<int64_t>(i));
  }
  return gather_rows(hiddens, std::move(ids));
}

std::vector<int64_t> durations_from_log(const Tensor& dur_log) {
  std::vector<int64_t> out(static_cast<size_t>(dur_log.size()));
  for (int64_t i = 0; i < dur_log.size(); ++i)
    out[static_cast<size_t>(i)] = std::max<int64_t>(1, std::llround(std::exp(dur_log[i])));
  return out;
}

AcousticModel::AcousticModel(const AcousticModelConfig& cfg, int64_t phoneme_vocab,
                             ParamStore& params, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  if (phoneme_vocab < 1) throw ConfigError("empty phoneme vocabulary");
  phoneme_emb_ = Embedding::create(params, "am.emb.phoneme", phoneme_vocab, cfg.hidden, rng);
  pitch_emb_ = Embedding::create(params, "am.emb.pitch", kPitchVocab, cfg.hidden, rng);
  dur_emb_ = Embedding::create(params, "am.emb.duration", cfg.duration_buckets, cfg.hidden, rng);
  for (int64_t i = 0; i < cfg.n_encoder_blocks; ++i)
    encoder_.push_back(make_block(params, "am.enc" + std::to_string(i), rng));
  for (int64_t i = 0; i < cfg.n_decoder_blocks; ++i)
    decoder_.push_back(make_block(params, "am.dec" + std::to_string(i), rng));
  dp_conv1_ = Conv1d::create(params, "am.dp.c1", cfg.hidden, cfg.hidden, 3, 1, rng);
  dp_ln1_ = LayerNorm::create(params, "am.dp.ln1", cfg.hidden);
  dp_conv2_ = Conv1d::create(params, "am.dp.c2", cfg.hidden, cfg.hidden, 3, 1, rng);
  dp_ln2_ = LayerNorm::create(params, "am.dp.ln2", cfg.hidden);
  dp_out_ = Dense::create(params, "am.dp.out", cfg.hidden, 1, rng);
  mel_head_ = Dense::create(params, "am.head.mel", cfg.hidden, cfg.n_mels, rng);
  f0_head_ = Dense::create(params, "am.head.f0", cfg.hidden, 1, rng);
  vuv_head_ = Dense::create(params, "am.head.vuv", cfg.hidden, 1, rng);
}

AcousticModel::Block AcousticModel::make_block(ParamStore& params, const std::string& name,
                                               Rng& rng) const {
  Block b;
  b.q = Dense::create(params, name + ".q", cfg_.hidden, cfg_.hidden, rng);
  b.k = Dense::create(params, name + ".k", cfg_.hidden, cfg_.hidden, rng);
  b.v = Dense::create(params, name + ".v", cfg_.hidden, cfg_.hidden, rng);
  b.o = Dense::create(params, name + ".o", cfg_.hidden, cfg_.hidden, rng);
  b.ln_attn = LayerNorm::create(params, name + ".ln1", cfg_.hidden);
  b.ln_conv = LayerNorm::create(params, name + ".ln2", cfg_.hidden);
  b.widen = Conv1d::create(params, name + ".cw", cfg_.hidden, cfg_.conv_filter, cfg_.conv_kernel,
                           1, rng);
  b.narrow = Conv1d::create(params, name + ".cn", cfg_.conv_filter, cfg_.hidden, 1, 1, rng);
  return b;
}

Var AcousticModel::run_block(const Block& b, Var x, bool train, Rng& rng) const {
  int64_t dh = cfg_.hidden / cfg_.n_heads;
  Var Q = b.q(x), K = b.k(x), V = b.v(x);
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(cfg_.n_heads));
  for (int64_t h = 0; h < cfg_.n_heads; ++h) {
    Var qh = col_slice(Q, h * dh, (h + 1) * dh);
    Var kh = col_slice(K, h * dh, (h + 1) * dh);
    Var vh = col_slice(V, h * dh, (h + 1) * dh);
    Var scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    heads.push_back(matmul(softmax_rows(scores), vh));
  }
  Var attn = b.o(concat_cols(heads));
  x = b.ln_attn(add(x, dropout(attn, cfg_.dropout, train, rng)));
  Var y = b.narrow(relu(b.widen(x)));
  return b.ln_conv(add(x, dropout(y, cfg_.dropout, train, rng)));
}

Var AcousticModel::encode(const ScoreSequence& seq, bool train, Rng& rng) const {
  size_t n = seq.phoneme_ids.size();
  if (n == 0) throw ContractError("empty score sequence");
  if (seq.pitch_ids.size() != n || seq.duration_frames.size() != n)
    throw ContractError("score sequence field lengths disagree");
  std::vector<int64_t> dur_buckets(n);
  for (size_t i = 0; i < n; ++i)
    dur_buckets[i] = std::min(seq.duration_frames[i], cfg_.duration_buckets - 1);
  Var x = add(add(phoneme_emb_(seq.phoneme_ids), pitch_emb_(seq.pitch_ids)),
              dur_emb_(dur_buckets));
  x = add(x, make_constant(positional_encoding(static_cast<int64_t>(n), cfg_.hidden)));
  x = dropout(x, cfg_.dropout, train, rng);
  for (const Block& b : encoder_) x = run_block(b, x, train, rng);
  return x;
}

Var AcousticModel::predict_durations(const Var& hiddens, bool train, Rng& rng) const {
  Var y = dropout(dp_ln1_(relu(dp_conv1_(hiddens))), cfg_.dropout, train, rng);
  y = dropout(dp_ln2_(relu(dp_conv2_(y))), cfg_.dropout, train, rng);
  return dp_out_(y);
}

AcousticOutput AcousticModel::decode(const Var& expanded, const std::vector<double>& note_midi,
                                     bool train, Rng& rng) const {
  if (expanded->value.rank() != 2 || expanded->value.cols() != cfg_.hidden)
    throw ContractError("decoder expects [T, hidden]");
  int64_t T = expanded->value.rows();
  if (static_cast<int64_t>(note_midi.size()) != T)
    throw ContractError("one note pitch per frame required");
  Var x = add(expanded, make_constant(positional_encoding(T, cfg_.hidden)));
  x = dropout(x, cfg_.dropout, train, rng);
  for (const Block& b : decoder_) x = run_block(b, x, train, rng);

  AcousticOutput out;
  out.mel = mel_head_(x);
  out.f0_residual = f0_head_(x);
  Tensor note({T, 1});
  for (int64_t t = 0; t < T; ++t) note[t] = note_midi[static_cast<size_t>(t)];
  out.f0_semitone = add(out.f0_residual, make_constant(std::move(note)));
  out.vuv_logit = vuv_head_(x);
  out.note_midi = note_midi;
  return out;
}

namespace {

// Frame-level note pitch for the residual shortcut; rests carry no pitch.
std::vector<double> expand_note_midi(const ScoreSequence& seq,
                                     const std::vector<int64_t>& durations) {
  std::vector<double> out;
  for (size_t i = 0; i < durations.size(); ++i) {
    double midi =
        seq.pitch_ids[i] == kRestPitchId ? 0.0 : static_cast<double>(seq.pitch_ids[i]);
    out.insert(out.end(), static_cast<size_t>(durations[i]), midi);
  }
  return out;
}

}  // namespace

AcousticOutput AcousticModel::forward(const ScoreSequence& seq,
                                      const std::vector<int64_t>& durations, bool train,
                                      Rng& rng) const {
  Var enc = encode(seq, train, rng);
  Var dur_log = predict_durations(enc, train, rng);
  Var expanded = length_regulate(enc, durations);
  AcousticOutput out = decode(expanded, expand_note_midi(seq, durations), train, rng);
  out.dur_log = dur_log;
  out.durations = durations;
  return out;
}

AcousticOutput AcousticModel::infer(const ScoreSequence& seq) const {
  Rng rng(0);  // eval mode never draws
  Var enc = encode(seq, false, rng);
  Var dur_log = predict_durations(enc, false, rng);
  std::vector<int64_t> durations = durations_from_log(dur_log->value);
  Var expanded = length_regulate(enc, durations);
  AcousticOutput out = decode(expanded, expand_note_midi(seq, durations), false, rng);
  out.dur_log = dur_log;
  out.durations = durations;
  return out;
}

AcousticLoss reconstruction_loss(const Var& mel_pred, const Var& f0_semitone_pred,
                                 const Var& vuv_logit, const Var& dur_log_pred,
                                 const Tensor& mel_target, const std::vector<double>& f0_target_hz,
                                 const std::vector<uint8_t>& vuv_target,
                                 const std::vector<int64_t>& dur_target_frames) {
  int64_t T = mel_pred->value.rows();
  if (mel_target.rank() != 2 || mel_target.rows() != T ||
      mel_target.cols() != mel_pred->value.cols())
    throw ContractError("mel prediction/target shapes disagree");
  if (static_cast<int64_t>(f0_target_hz.size()) != T ||
      static_cast<int64_t>(vuv_target.size()) != T)
    throw ContractError("pitch/voicing targets must be frame-aligned");
  if (f0_semitone_pred->value.rows() != T || vuv_logit->value.rows() != T)
    throw ContractError("pitch/voicing predictions must be frame-aligned");
  if (dur_log_pred->value.size() != static_cast<int64_t>(dur_target_frames.size()))
    throw ContractError("one duration target per phoneme required");

  AcousticLoss loss;
  loss.mel_l1 = mean(abs_v(sub(mel_pred, make_constant(mel_target))));

  Tensor f0_semi({T, 1});
  Tensor mask({T, 1});
  int64_t voiced = 0;
  for (int64_t t = 0; t < T; ++t) {
    bool v = vuv_target[static_cast<size_t>(t)] != 0;
    mask[t] = v ? 1.0 : 0.0;
    f0_semi[t] = v ? hz_to_semitone(f0_target_hz[static_cast<size_t>(t)]) : 0.0;
    voiced += v ? 1 : 0;
  }
  Var diff2 = square(sub(f0_semitone_pred, make_constant(std::move(f0_semi))));
  loss.f0_l2 = scale(sum(mul(diff2, make_constant(std::move(mask)))),
                     1.0 / static_cast<double>(std::max<int64_t>(1, voiced)));

  Tensor y({T, 1});
  for (int64_t t = 0; t < T; ++t) y[t] = vuv_target[static_cast<size_t>(t)] ? 1.0 : 0.0;
  loss.vuv_bce = mean(sub(softplus(vuv_logit), mul(vuv_logit, make_constant(std::move(y)))));

  Tensor dur_log_t({static_cast<int64_t>(dur_target_frames.size()), 1});
  for (size_t i = 0; i < dur_target_frames.size(); ++i) {
    if (dur_target_frames[i] < 1) throw DomainError("duration targets must be positive");
    dur_log_t[static_cast<int64_t>(i)] = std::log(static_cast<double>(dur_target_frames[i]));
  }
  loss.dur_mse = mean(square(sub(dur_log_pred, make_constant(std::move(dur_log_t)))));

  loss.total = add(add(loss.mel_l1, scale(add(loss.f0_l2, loss.vuv_bce), 0.1)),
                   loss.dur_mse);
  return loss;
}

}  // namespace svs
