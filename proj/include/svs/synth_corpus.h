#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/rng.h"
#include "svs/score_frontend.h"
#include "svs/wav_io.h"

namespace svs {

struct NoteValue {
  int num = 1;
  int den = 4;
};

// Recipe for a deterministic additive-harmonic singing corpus.  Every
// "phoneme" is a distinct harmonic amplitude profile, so the corpus carries a
// learnable phoneme-to-spectrum mapping without recorded speech.
struct SyntheticCorpusSpec {
  int64_t n_utterances = 4;
  double tempo_min = 60.0;  // slow tempi keep notes long enough for tracking
  double tempo_max = 96.0;
  int midi_min = 52;  // E3..G4 sits well inside the tracker's range
  int midi_max = 67;
  int notes_per_utterance_min = 6;
  int notes_per_utterance_max = 10;
  int phonemes_per_note_min = 1;
  int phonemes_per_note_max = 3;
  std::vector<NoteValue> note_values = {{1, 4}, {3, 8}, {1, 2}};
  double rest_probability = 0.15;
  int harmonic_count = 8;
  double vibrato_depth_cents = 15.0;
  double vibrato_rate_hz = 5.0;
  // Broadband excitation under voiced segments; keeps every mel bin live so
  // corpus statistics are well-defined up to the top of the band.
  double noise_floor = 1e-3;
  double sample_rate = 48000.0;
  double hop_seconds = 0.005;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// One generated utterance with its exact frame alignment and the analytic
// pitch/voicing tracks the waveform was built from.  The waveform length is
// exactly sum(duration_frames) * hop samples.
struct SyntheticUtterance {
  std::string name;
  Score score;
  ScoreSequence seq;
  Waveform wave;
  std::vector<double> f0_hz;  // per frame, 0 where unvoiced
  std::vector<uint8_t> vuv;   // per frame, 1 = voiced
};

// Fixed phoneme inventory ("sil" + twelve voiced timbres) with one-syllable
// entries for each, so hand-written scores can name them directly.
Lexicon builtin_lexicon();

// Renders one score with the spec's synthesis parameters.  Timbres derive
// from the spec seed; `noise_rng` feeds only the broadband excitation.
SyntheticUtterance render_score(const SyntheticCorpusSpec& spec, const Lexicon& lexicon,
                                const Score& score, const std::string& name, Rng noise_rng);

// Samples scores and renders them; the seed fixes the result bit-exactly.
std::vector<SyntheticUtterance> generate_corpus(const SyntheticCorpusSpec& spec,
                                                const Lexicon& lexicon);

}  // namespace svs
