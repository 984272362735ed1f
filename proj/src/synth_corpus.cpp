#include "svs/synth_corpus.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "svs/dsp_features.h"
#include "svs/errors.h"

namespace svs {

namespace {

constexpr double kTwoPi = 6.283185307179586477;
constexpr double kHarmonicPeak = 0.35;     // total harmonic amplitude budget
constexpr double kSegmentRampSeconds = 0.002;

double vibrato_hz(const SyntheticCorpusSpec& spec, double note_hz, double t_seconds) {
  double cents = spec.vibrato_depth_cents * std::sin(kTwoPi * spec.vibrato_rate_hz * t_seconds);
  return note_hz * std::exp2(cents / 1200.0);
}

// One amplitude profile per phoneme, rows indexed by phoneme id.  "sil" gets
// zeros; the rest are random 1/h-shaped rolloffs scaled to a fixed peak
// budget so every timbre has the same headroom.
std::vector<std::vector<double>> phoneme_timbres(const SyntheticCorpusSpec& spec,
                                                 const Lexicon& lexicon) {
  Rng rng = Rng(spec.seed).fork("timbres");
  std::vector<std::vector<double>> amps(lexicon.phonemes.size());
  for (size_t p = 0; p < lexicon.phonemes.size(); ++p) {
    Rng ph = rng.fork(static_cast<uint64_t>(p));
    std::vector<double> a(spec.harmonic_count, 0.0);
    if (lexicon.phonemes[p] != kSilencePhoneme) {
      double total = 0.0;
      for (int h = 0; h < spec.harmonic_count; ++h) {
        a[h] = ph.uniform(0.2, 1.0) / static_cast<double>(h + 1);
        total += a[h];
      }
      for (double& v : a) v *= kHarmonicPeak / total;
    }
    amps[p] = std::move(a);
  }
  return amps;
}

double segment_envelope(int64_t i, int64_t n, int64_t ramp) {
  double env = 1.0;
  if (i < ramp) env = 0.5 * (1.0 - std::cos(kTwoPi * 0.5 * (i + 1) / (ramp + 1)));
  int64_t from_end = n - 1 - i;
  if (from_end < ramp)
    env = std::min(env, 0.5 * (1.0 - std::cos(kTwoPi * 0.5 * (from_end + 1) / (ramp + 1))));
  return env;
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (n_utterances < 1) throw ConfigError("corpus: n_utterances must be positive");
  if (!(tempo_min > 0.0) || tempo_max < tempo_min) throw ConfigError("corpus: bad tempo range");
  if (midi_min < 0 || midi_max > 127 || midi_max < midi_min)
    throw ConfigError("corpus: bad MIDI pitch range");
  if (notes_per_utterance_min < 1 || notes_per_utterance_max < notes_per_utterance_min)
    throw ConfigError("corpus: bad notes-per-utterance range");
  if (phonemes_per_note_min < 1 || phonemes_per_note_max < phonemes_per_note_min)
    throw ConfigError("corpus: bad phonemes-per-note range");
  if (note_values.empty()) throw ConfigError("corpus: note-value set is empty");
  for (const NoteValue& v : note_values)
    if (v.num < 1 || v.den < 1) throw ConfigError("corpus: note values must be positive");
  if (rest_probability < 0.0 || rest_probability > 1.0)
    throw ConfigError("corpus: rest_probability outside [0, 1]");
  if (harmonic_count < 1) throw ConfigError("corpus: harmonic_count must be positive");
  if (vibrato_depth_cents < 0.0 || vibrato_rate_hz < 0.0)
    throw ConfigError("corpus: vibrato parameters must be non-negative");
  if (noise_floor < 0.0) throw ConfigError("corpus: noise_floor must be non-negative");
  if (!(sample_rate > 0.0) || !(hop_seconds > 0.0))
    throw ConfigError("corpus: sample_rate and hop_seconds must be positive");
  try {
    hop_samples(hop_seconds, sample_rate);
  } catch (const DomainError&) {
    throw ConfigError("corpus: hop must be an integer number of samples");
  }
}

Lexicon builtin_lexicon() {
  Lexicon lex;
  lex.phonemes = {kSilencePhoneme, "a", "e", "i", "o", "u", "ka", "ma", "na", "ra", "sa", "ta"};
  for (size_t p = 1; p < lex.phonemes.size(); ++p)
    lex.syllables[lex.phonemes[p]] = {lex.phonemes[p]};
  return lex;
}

SyntheticUtterance render_score(const SyntheticCorpusSpec& spec, const Lexicon& lexicon,
                                const Score& score, const std::string& name, Rng noise_rng) {
  spec.validate();
  SyntheticUtterance utt;
  utt.name = name;
  utt.score = score;
  utt.seq = encode_score(score, lexicon, spec.hop_seconds);

  const int64_t hop = hop_samples(spec.hop_seconds, spec.sample_rate);
  const double sr = spec.sample_rate;
  const int64_t total_frames =
      std::accumulate(utt.seq.duration_frames.begin(), utt.seq.duration_frames.end(), int64_t{0});
  utt.wave.sample_rate = sr;
  utt.wave.samples.assign(total_frames * hop, 0.0);
  utt.f0_hz.assign(total_frames, 0.0);
  utt.vuv.assign(total_frames, 0);

  const auto timbres = phoneme_timbres(spec, lexicon);
  const int64_t ramp = std::llround(kSegmentRampSeconds * sr);
  // Harmonic phase carries across segments so voiced-to-voiced timbre or
  // pitch changes stay click-free.
  std::vector<double> phase(spec.harmonic_count, 0.0);

  int64_t frame0 = 0;
  for (size_t k = 0; k < utt.seq.phoneme_ids.size(); ++k) {
    const int64_t frames = utt.seq.duration_frames[k];
    const bool voiced = utt.seq.pitch_ids[k] != kRestPitchId;
    if (voiced) {
      const double note_hz = midi_to_hz(static_cast<int>(utt.seq.pitch_ids[k]));
      const auto& amp = timbres.at(static_cast<size_t>(utt.seq.phoneme_ids[k]));
      const int64_t s0 = frame0 * hop, n = frames * hop;
      const int64_t seg_ramp = std::min(ramp, n / 4);
      for (int64_t i = 0; i < n; ++i) {
        const int64_t s = s0 + i;
        const double f = vibrato_hz(spec, note_hz, static_cast<double>(s) / sr);
        double x = 0.0;
        for (int h = 0; h < spec.harmonic_count; ++h) {
          phase[h] += kTwoPi * (h + 1) * f / sr;
          if ((h + 1) * f < 0.45 * sr) x += amp[h] * std::sin(phase[h]);
        }
        x += spec.noise_floor * noise_rng.normal();
        utt.wave.samples[s] = segment_envelope(i, n, seg_ramp) * x;
      }
      for (int64_t t = frame0; t < frame0 + frames; ++t) {
        utt.f0_hz[t] = vibrato_hz(spec, note_hz, static_cast<double>(t * hop) / sr);
        utt.vuv[t] = 1;
      }
    }
    frame0 += frames;
  }
  return utt;
}

std::vector<SyntheticUtterance> generate_corpus(const SyntheticCorpusSpec& spec,
                                                const Lexicon& lexicon) {
  spec.validate();
  Rng root(spec.seed);
  const Rng scores = root.fork("scores");
  const Rng noise = root.fork("noise");

  std::vector<std::string> voiced;
  for (const std::string& ph : lexicon.phonemes)
    if (ph != kSilencePhoneme) voiced.push_back(ph);
  if (voiced.empty()) throw ConfigError("corpus: lexicon has no voiced phonemes");

  std::vector<SyntheticUtterance> corpus;
  corpus.reserve(spec.n_utterances);
  for (int64_t u = 0; u < spec.n_utterances; ++u) {
    Rng rng = scores.fork(static_cast<uint64_t>(u));
    Score score;
    score.tempo_bpm = rng.uniform(spec.tempo_min, spec.tempo_max);
    const int64_t n_notes =
        rng.uniform_int(spec.notes_per_utterance_min, spec.notes_per_utterance_max);
    for (int64_t i = 0; i < n_notes; ++i) {
      Note note;
      const NoteValue& v =
          spec.note_values[rng.uniform_int(0, static_cast<int64_t>(spec.note_values.size()) - 1)];
      note.value_num = v.num;
      note.value_den = v.den;
      // The first note is always pitched so every utterance has voiced frames.
      if (i > 0 && rng.uniform() < spec.rest_probability) {
        note.note_name = kRestNoteName;
      } else {
        const int midi = static_cast<int>(rng.uniform_int(spec.midi_min, spec.midi_max));
        note.note_name = midi_to_note_name(midi);
        const int64_t n_ph = rng.uniform_int(spec.phonemes_per_note_min, spec.phonemes_per_note_max);
        for (int64_t p = 0; p < n_ph; ++p) {
          const std::string& ph = voiced[rng.uniform_int(0, static_cast<int64_t>(voiced.size()) - 1)];
          note.phonemes.push_back(ph);
          note.syllable += note.syllable.empty() ? ph : "-" + ph;
        }
      }
      score.notes.push_back(std::move(note));
    }
    char name[32];
    std::snprintf(name, sizeof(name), "utt%03lld", static_cast<long long>(u));
    corpus.push_back(
        render_score(spec, lexicon, score, name, noise.fork(static_cast<uint64_t>(u))));
  }
  return corpus;
}

}  // namespace svs
