#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svs/errors.h"

namespace svs {

// Pitch id space: MIDI notes 0..127, id 128 reserved for rests.
constexpr int kRestPitchId = 128;
constexpr int kPitchVocab = 129;
constexpr const char* kRestNoteName = "rest";
constexpr const char* kSilencePhoneme = "sil";

struct Note {
  std::string syllable;
  std::vector<std::string> phonemes;  // optional; lexicon fills it when empty
  std::string note_name;              // scientific pitch ("C4", "F#3") or "rest"
  int value_num = 1;                  // note value as a fraction of a whole note
  int value_den = 4;
};

struct Score {
  double tempo_bpm = 120.0;
  int beats_per_bar = 4;
  int beat_unit = 4;  // denominator of the time signature
  std::vector<Note> notes;
};

// Syllable -> phoneme list, plus the phoneme inventory that defines ids.
struct Lexicon {
  std::vector<std::string> phonemes;  // index = phoneme id
  std::map<std::string, std::vector<std::string>> syllables;

  int phoneme_id(const std::string& ph) const;
  bool has_phoneme(const std::string& ph) const { return find_(ph) >= 0; }

 private:
  int find_(const std::string& ph) const;
};

// Per-phoneme encoder input: ids plus the frame count implied by the score.
struct ScoreSequence {
  std::vector<int64_t> phoneme_ids;
  std::vector<int64_t> pitch_ids;       // 0..128
  std::vector<int64_t> duration_frames; // quantized, >= 1
};

// "C4" -> 60.  Accepts letter A..G, optional # or b, octave (may be negative).
int note_to_midi(const std::string& name);

double midi_to_hz(int midi);
// 60 -> "C4"; black keys come back as sharps.
std::string midi_to_note_name(int midi);
// Fractional MIDI to Hz; no range restriction (used for residual pitch).
double semitone_to_hz(double semitone);
double hz_to_semitone(double hz);

// Shifts every pitched note by `semitones`; rests pass through.  Throws
// RangeError when a shifted note leaves 0..127.
Score transpose_score(const Score& score, int semitones);

// Note value (num/den of a whole note) at `tempo_bpm` with the bar's beat
// unit, quantized to frames of `hop_seconds` (round half up, minimum 1).
int quantize_duration(int value_num, int value_den, double tempo_bpm, int beat_unit,
                      double hop_seconds);

// Expands a score into aligned per-phoneme id sequences.  A note's frame
// budget is split evenly across its phonemes, remainder to the earliest.
// Rests become one "sil" phoneme at the rest pitch id.
ScoreSequence encode_score(const Score& score, const Lexicon& lexicon, double hop_seconds);

Score score_from_json(const std::string& json_text);
std::string score_to_json(const Score& score);
Lexicon lexicon_from_json(const std::string& json_text);
std::string lexicon_to_json(const Lexicon& lexicon);

Score load_score(const std::string& path);
Lexicon load_lexicon(const std::string& path);

}  // namespace svs
