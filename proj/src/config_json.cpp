#include "svs/config_json.h"

#include <functional>
#include <map>
#include <string>

#include "svs/errors.h"

namespace svs {

using nlohmann::json;

namespace {

// Applies every present key through its setter; anything unrecognized is
// rejected so a typo cannot silently fall back to a default.
void apply_keys(const json& j, const std::map<std::string, std::function<void(const json&)>>& set,
                const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto it = set.find(key);
    if (it == set.end()) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
    }
  }
}

}  // namespace

json config_to_json(const FeatureConfig& c) {
  return json{{"n_mels", c.n_mels},
              {"window_seconds", c.window_seconds},
              {"hop_seconds", c.hop_seconds},
              {"mel_floor", c.mel_floor},
              {"f0_min_hz", c.f0_min_hz},
              {"f0_max_hz", c.f0_max_hz},
              {"yin_threshold", c.yin_threshold},
              {"yin_integration_seconds", c.yin_integration_seconds},
              {"silence_rms", c.silence_rms}};
}

void config_from_json(const json& j, FeatureConfig& c) {
  apply_keys(j,
             {{"n_mels", [&](const json& v) { c.n_mels = v.get<int>(); }},
              {"window_seconds", [&](const json& v) { c.window_seconds = v.get<double>(); }},
              {"hop_seconds", [&](const json& v) { c.hop_seconds = v.get<double>(); }},
              {"mel_floor", [&](const json& v) { c.mel_floor = v.get<double>(); }},
              {"f0_min_hz", [&](const json& v) { c.f0_min_hz = v.get<double>(); }},
              {"f0_max_hz", [&](const json& v) { c.f0_max_hz = v.get<double>(); }},
              {"yin_threshold", [&](const json& v) { c.yin_threshold = v.get<double>(); }},
              {"yin_integration_seconds",
               [&](const json& v) { c.yin_integration_seconds = v.get<double>(); }},
              {"silence_rms", [&](const json& v) { c.silence_rms = v.get<double>(); }}},
             "feature config");
}

json config_to_json(const AcousticModelConfig& c) {
  return json{{"n_encoder_blocks", c.n_encoder_blocks},
              {"n_decoder_blocks", c.n_decoder_blocks},
              {"hidden", c.hidden},
              {"conv_kernel", c.conv_kernel},
              {"conv_filter", c.conv_filter},
              {"n_heads", c.n_heads},
              {"dropout", c.dropout},
              {"n_mels", c.n_mels},
              {"duration_buckets", c.duration_buckets}};
}

void config_from_json(const json& j, AcousticModelConfig& c) {
  apply_keys(
      j,
      {{"n_encoder_blocks", [&](const json& v) { c.n_encoder_blocks = v.get<int64_t>(); }},
       {"n_decoder_blocks", [&](const json& v) { c.n_decoder_blocks = v.get<int64_t>(); }},
       {"hidden", [&](const json& v) { c.hidden = v.get<int64_t>(); }},
       {"conv_kernel", [&](const json& v) { c.conv_kernel = v.get<int64_t>(); }},
       {"conv_filter", [&](const json& v) { c.conv_filter = v.get<int64_t>(); }},
       {"n_heads", [&](const json& v) { c.n_heads = v.get<int64_t>(); }},
       {"dropout", [&](const json& v) { c.dropout = v.get<double>(); }},
       {"n_mels", [&](const json& v) { c.n_mels = v.get<int64_t>(); }},
       {"duration_buckets", [&](const json& v) { c.duration_buckets = v.get<int64_t>(); }}},
      "acoustic model config");
}

json config_to_json(const AcousticTrainSpec& c) {
  return json{{"steps", c.steps},
              {"batch", c.batch},
              {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},
              {"eps", c.adam.eps},
              {"d_model", c.d_model},
              {"warmup_steps", c.warmup_steps},
              {"adv_start_step", c.adv_start_step},
              {"lambda_adv", c.lambda_adv},
              {"grad_clip", c.grad_clip},
              {"window_min_frames", c.window_min_frames},
              {"window_max_frames", c.window_max_frames},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed}};
}

void config_from_json(const json& j, AcousticTrainSpec& c) {
  apply_keys(
      j,
      {{"steps", [&](const json& v) { c.steps = v.get<int64_t>(); }},
       {"batch", [&](const json& v) { c.batch = v.get<int64_t>(); }},
       {"beta1", [&](const json& v) { c.adam.beta1 = v.get<double>(); }},
       {"beta2", [&](const json& v) { c.adam.beta2 = v.get<double>(); }},
       {"eps", [&](const json& v) { c.adam.eps = v.get<double>(); }},
       {"d_model", [&](const json& v) { c.d_model = v.get<int64_t>(); }},
       {"warmup_steps", [&](const json& v) { c.warmup_steps = v.get<int64_t>(); }},
       {"adv_start_step", [&](const json& v) { c.adv_start_step = v.get<int64_t>(); }},
       {"lambda_adv", [&](const json& v) { c.lambda_adv = v.get<double>(); }},
       {"grad_clip", [&](const json& v) { c.grad_clip = v.get<double>(); }},
       {"window_min_frames", [&](const json& v) { c.window_min_frames = v.get<int64_t>(); }},
       {"window_max_frames", [&](const json& v) { c.window_max_frames = v.get<int64_t>(); }},
       {"checkpoint_every", [&](const json& v) { c.checkpoint_every = v.get<int64_t>(); }},
       {"seed", [&](const json& v) { c.seed = v.get<uint64_t>(); }}},
      "acoustic train spec");
}

json config_to_json(const VocoderConfig& c) {
  return json{{"n_layers_per_stack", c.n_layers_per_stack},
              {"n_stacks", c.n_stacks},
              {"kernel", c.kernel},
              {"residual_channels", c.residual_channels},
              {"gate_channels", c.gate_channels},
              {"skip_channels", c.skip_channels},
              {"hop_samples", c.hop_samples},
              {"n_mels", c.n_mels},
              {"upsample_factors", c.upsample_factors}};
}

void config_from_json(const json& j, VocoderConfig& c) {
  apply_keys(
      j,
      {{"n_layers_per_stack", [&](const json& v) { c.n_layers_per_stack = v.get<int64_t>(); }},
       {"n_stacks", [&](const json& v) { c.n_stacks = v.get<int64_t>(); }},
       {"kernel", [&](const json& v) { c.kernel = v.get<int64_t>(); }},
       {"residual_channels", [&](const json& v) { c.residual_channels = v.get<int64_t>(); }},
       {"gate_channels", [&](const json& v) { c.gate_channels = v.get<int64_t>(); }},
       {"skip_channels", [&](const json& v) { c.skip_channels = v.get<int64_t>(); }},
       {"hop_samples", [&](const json& v) { c.hop_samples = v.get<int64_t>(); }},
       {"n_mels", [&](const json& v) { c.n_mels = v.get<int64_t>(); }},
       {"upsample_factors",
        [&](const json& v) { c.upsample_factors = v.get<std::vector<int64_t>>(); }}},
      "vocoder config");
}

json config_to_json(const VocoderTrainSpec& c) {
  json res = json::array();
  for (const StftResolution& r : c.stft_resolutions)
    res.push_back({{"n_fft", r.n_fft}, {"hop", r.hop}, {"win", r.win}});
  return json{{"steps", c.steps},
              {"batch", c.batch},
              {"beta1", c.radam.beta1},
              {"beta2", c.radam.beta2},
              {"eps", c.radam.eps},
              {"lr0", c.lr0},
              {"halve_every", c.halve_every},
              {"adv_start_step", c.adv_start_step},
              {"lambda_adv", c.lambda_adv},
              {"grad_clip", c.grad_clip},
              {"crop_frames", c.crop_frames},
              {"crop_lengths_s", c.crops.lengths_s},
              {"crop_sample_rate", c.crops.sample_rate},
              {"stft_resolutions", res},
              {"checkpoint_every", c.checkpoint_every},
              {"seed", c.seed}};
}

void config_from_json(const json& j, VocoderTrainSpec& c) {
  apply_keys(
      j,
      {{"steps", [&](const json& v) { c.steps = v.get<int64_t>(); }},
       {"batch", [&](const json& v) { c.batch = v.get<int64_t>(); }},
       {"beta1", [&](const json& v) { c.radam.beta1 = v.get<double>(); }},
       {"beta2", [&](const json& v) { c.radam.beta2 = v.get<double>(); }},
       {"eps", [&](const json& v) { c.radam.eps = v.get<double>(); }},
       {"lr0", [&](const json& v) { c.lr0 = v.get<double>(); }},
       {"halve_every", [&](const json& v) { c.halve_every = v.get<int64_t>(); }},
       {"adv_start_step", [&](const json& v) { c.adv_start_step = v.get<int64_t>(); }},
       {"lambda_adv", [&](const json& v) { c.lambda_adv = v.get<double>(); }},
       {"grad_clip", [&](const json& v) { c.grad_clip = v.get<double>(); }},
       {"crop_frames", [&](const json& v) { c.crop_frames = v.get<int64_t>(); }},
       {"crop_lengths_s",
        [&](const json& v) { c.crops.lengths_s = v.get<std::vector<double>>(); }},
       {"crop_sample_rate", [&](const json& v) { c.crops.sample_rate = v.get<double>(); }},
       {"stft_resolutions",
        [&](const json& v) {
          std::vector<StftResolution> rs;
          for (const json& r : v)
            rs.push_back({r.at("n_fft").get<int64_t>(), r.at("hop").get<int64_t>(),
                          r.at("win").get<int64_t>()});
          c.stft_resolutions = std::move(rs);
        }},
       {"checkpoint_every", [&](const json& v) { c.checkpoint_every = v.get<int64_t>(); }},
       {"seed", [&](const json& v) { c.seed = v.get<uint64_t>(); }}},
      "vocoder train spec");
}

json config_to_json(const SyntheticCorpusSpec& c) {
  json values = json::array();
  for (const NoteValue& v : c.note_values) values.push_back({{"num", v.num}, {"den", v.den}});
  return json{{"n_utterances", c.n_utterances},
              {"tempo_min", c.tempo_min},
              {"tempo_max", c.tempo_max},
              {"midi_min", c.midi_min},
              {"midi_max", c.midi_max},
              {"notes_per_utterance_min", c.notes_per_utterance_min},
              {"notes_per_utterance_max", c.notes_per_utterance_max},
              {"phonemes_per_note_min", c.phonemes_per_note_min},
              {"phonemes_per_note_max", c.phonemes_per_note_max},
              {"note_values", values},
              {"rest_probability", c.rest_probability},
              {"harmonic_count", c.harmonic_count},
              {"vibrato_depth_cents", c.vibrato_depth_cents},
              {"vibrato_rate_hz", c.vibrato_rate_hz},
              {"noise_floor", c.noise_floor},
              {"sample_rate", c.sample_rate},
              {"hop_seconds", c.hop_seconds},
              {"seed", c.seed}};
}

void config_from_json(const json& j, SyntheticCorpusSpec& c) {
  apply_keys(
      j,
      {{"n_utterances", [&](const json& v) { c.n_utterances = v.get<int64_t>(); }},
       {"tempo_min", [&](const json& v) { c.tempo_min = v.get<double>(); }},
       {"tempo_max", [&](const json& v) { c.tempo_max = v.get<double>(); }},
       {"midi_min", [&](const json& v) { c.midi_min = v.get<int>(); }},
       {"midi_max", [&](const json& v) { c.midi_max = v.get<int>(); }},
       {"notes_per_utterance_min",
        [&](const json& v) { c.notes_per_utterance_min = v.get<int>(); }},
       {"notes_per_utterance_max",
        [&](const json& v) { c.notes_per_utterance_max = v.get<int>(); }},
       {"phonemes_per_note_min", [&](const json& v) { c.phonemes_per_note_min = v.get<int>(); }},
       {"phonemes_per_note_max", [&](const json& v) { c.phonemes_per_note_max = v.get<int>(); }},
       {"note_values",
        [&](const json& v) {
          std::vector<NoteValue> values;
          for (const json& nv : v)
            values.push_back({nv.at("num").get<int>(), nv.at("den").get<int>()});
          c.note_values = std::move(values);
        }},
       {"rest_probability", [&](const json& v) { c.rest_probability = v.get<double>(); }},
       {"harmonic_count", [&](const json& v) { c.harmonic_count = v.get<int>(); }},
       {"vibrato_depth_cents", [&](const json& v) { c.vibrato_depth_cents = v.get<double>(); }},
       {"vibrato_rate_hz", [&](const json& v) { c.vibrato_rate_hz = v.get<double>(); }},
       {"noise_floor", [&](const json& v) { c.noise_floor = v.get<double>(); }},
       {"sample_rate", [&](const json& v) { c.sample_rate = v.get<double>(); }},
       {"hop_seconds", [&](const json& v) { c.hop_seconds = v.get<double>(); }},
       {"seed", [&](const json& v) { c.seed = v.get<uint64_t>(); }}},
      "corpus spec");
}

json stats_to_json(const NormStats& s) {
  return json{{"mel_mean", s.mel_mean},
              {"mel_std", s.mel_std},
              {"f0_mean_semitone", s.f0_mean_semitone},
              {"f0_std_semitone", s.f0_std_semitone},
              {"voiced_frames", s.voiced_frames}};
}

NormStats stats_from_json(const json& j) {
  NormStats s;
  try {
    s.mel_mean = j.at("mel_mean").get<std::vector<double>>();
    s.mel_std = j.at("mel_std").get<std::vector<double>>();
    s.f0_mean_semitone = j.at("f0_mean_semitone").get<double>();
    s.f0_std_semitone = j.at("f0_std_semitone").get<double>();
    s.voiced_frames = j.at("voiced_frames").get<int64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("statistics: ") + e.what());
  }
  return s;
}

}  // namespace svs
