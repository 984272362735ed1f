#include "svs/score_frontend.h"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace svs {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "3/8" or "1" as a fraction of a whole note.
void parse_value(const std::string& s, int& num, int& den) {
  size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      num = std::stoi(s);
      den = 1;
    } else {
      num = std::stoi(s.substr(0, slash));
      den = std::stoi(s.substr(slash + 1));
    }
  } catch (const std::exception&) {
    throw ParseError("bad note value: \"" + s + "\"");
  }
  if (num < 1 || den < 1) throw DomainError("note value must be positive: \"" + s + "\"");
}

}  // namespace

int Lexicon::find_(const std::string& ph) const {
  for (size_t i = 0; i < phonemes.size(); ++i)
    if (phonemes[i] == ph) return static_cast<int>(i);
  return -1;
}

int Lexicon::phoneme_id(const std::string& ph) const {
  int id = find_(ph);
  if (id < 0) throw DataError("phoneme not in lexicon inventory: \"" + ph + "\"");
  return id;
}

int note_to_midi(const std::string& name) {
  if (name.empty()) throw ParseError("empty note name");
  static constexpr int kChroma[7] = {9, 11, 0, 2, 4, 5, 7};  // A B C D E F G
  char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  if (letter < 'A' || letter > 'G') throw ParseError("bad note letter in \"" + name + "\"");
  int chroma = kChroma[letter - 'A'];
  size_t pos = 1;
  if (pos < name.size() && (name[pos] == '#' || name[pos] == 'b')) {
    chroma += name[pos] == '#' ? 1 : -1;
    ++pos;
  }
  if (pos >= name.size()) throw ParseError("missing octave in \"" + name + "\"");
  int octave = 0;
  try {
    size_t used = 0;
    octave = std::stoi(name.substr(pos), &used);
    if (pos + used != name.size()) throw ParseError("trailing characters in \"" + name + "\"");
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("bad octave in \"" + name + "\"");
  }
  int midi = 12 * (octave + 1) + chroma;
  if (midi < 0 || midi > 127)
    throw RangeError("note \"" + name + "\" is outside MIDI range 0..127");
  return midi;
}

double midi_to_hz(int midi) {
  if (midi < 0 || midi > 127) throw RangeError("MIDI note outside 0..127");
  return semitone_to_hz(static_cast<double>(midi));
}

std::string midi_to_note_name(int midi) {
  if (midi < 0 || midi > 127) throw RangeError("MIDI note outside 0..127");
  static constexpr const char* kNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                             "F#", "G",  "G#", "A",  "A#", "B"};
  return std::string(kNames[midi % 12]) + std::to_string(midi / 12 - 1);
}

Score transpose_score(const Score& score, int semitones) {
  Score out = score;
  for (Note& note : out.notes)
    if (note.note_name != kRestNoteName)
      note.note_name = midi_to_note_name(note_to_midi(note.note_name) + semitones);
  return out;
}

double semitone_to_hz(double semitone) {
  return 440.0 * std::pow(2.0, (semitone - 69.0) / 12.0);
}

double hz_to_semitone(double hz) {
  if (hz <= 0.0) throw DomainError("frequency must be positive");
  return 69.0 + 12.0 * std::log2(hz / 440.0);
}

int quantize_duration(int value_num, int value_den, double tempo_bpm, int beat_unit,
                      double hop_seconds) {
  if (value_num < 1 || value_den < 1) throw DomainError("note value must be positive");
  if (tempo_bpm <= 0.0) throw DomainError("tempo must be positive");
  if (beat_unit < 1) throw DomainError("beat unit must be positive");
  if (hop_seconds <= 0.0) throw DomainError("hop must be positive");
  double beats = static_cast<double>(value_num) / static_cast<double>(value_den) *
                 static_cast<double>(beat_unit);
  double seconds = beats * 60.0 / tempo_bpm;
  // Round half up.  The 1e-9 guard keeps exact musical ties (e.g. 12.5 frames)
  // rounding up even when a decimal hop is inexact in binary.
  int frames = static_cast<int>(std::floor(seconds / hop_seconds + 0.5 + 1e-9));
  return frames < 1 ? 1 : frames;
}

ScoreSequence encode_score(const Score& score, const Lexicon& lexicon, double hop_seconds) {
  ScoreSequence seq;
  for (size_t ni = 0; ni < score.notes.size(); ++ni) {
    const Note& note = score.notes[ni];
    int frames = quantize_duration(note.value_num, note.value_den, score.tempo_bpm,
                                   score.beat_unit, hop_seconds);

    bool rest = note.note_name == kRestNoteName;
    int pitch = rest ? kRestPitchId : note_to_midi(note.note_name);

    std::vector<std::string> phs;
    if (rest) {
      phs = {kSilencePhoneme};
    } else if (!note.phonemes.empty()) {
      phs = note.phonemes;
    } else {
      auto it = lexicon.syllables.find(note.syllable);
      if (it == lexicon.syllables.end())
        throw DataError("syllable not in lexicon: \"" + note.syllable + "\"");
      phs = it->second;
    }
    if (phs.empty()) throw DataError("note " + std::to_string(ni) + " has no phonemes");

    int k = static_cast<int>(phs.size());
    if (frames < k)
      throw DomainError("note " + std::to_string(ni) + " spans " + std::to_string(frames) +
                        " frames but has " + std::to_string(k) + " phonemes");
    int base = frames / k;
    int rem = frames % k;
    for (int pi = 0; pi < k; ++pi) {
      seq.phoneme_ids.push_back(lexicon.phoneme_id(phs[static_cast<size_t>(pi)]));
      seq.pitch_ids.push_back(pitch);
      seq.duration_frames.push_back(base + (pi < rem ? 1 : 0));
    }
  }
  return seq;
}

Score score_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("score JSON: ") + e.what());
  }
  Score s;
  try {
    s.tempo_bpm = j.at("tempo").get<double>();
    auto ts = j.at("time_signature");
    s.beats_per_bar = ts.at(0).get<int>();
    s.beat_unit = ts.at(1).get<int>();
    for (const auto& jn : j.at("notes")) {
      Note n;
      n.syllable = jn.value("syllable", std::string());
      if (jn.contains("phonemes"))
        for (const auto& p : jn.at("phonemes")) n.phonemes.push_back(p.get<std::string>());
      n.note_name = jn.at("note").get<std::string>();
      parse_value(jn.at("value").get<std::string>(), n.value_num, n.value_den);
      s.notes.push_back(std::move(n));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("score JSON: ") + e.what());
  }
  if (s.tempo_bpm <= 0.0) throw DomainError("tempo must be positive");
  if (s.beats_per_bar < 1 || s.beat_unit < 1) throw DomainError("bad time signature");
  return s;
}

std::string score_to_json(const Score& score) {
  json j;
  j["tempo"] = score.tempo_bpm;
  j["time_signature"] = {score.beats_per_bar, score.beat_unit};
  j["notes"] = json::array();
  for (const Note& n : score.notes) {
    json jn;
    jn["syllable"] = n.syllable;
    jn["phonemes"] = n.phonemes;
    jn["note"] = n.note_name;
    jn["value"] = std::to_string(n.value_num) + "/" + std::to_string(n.value_den);
    j["notes"].push_back(std::move(jn));
  }
  return j.dump(2);
}

Lexicon lexicon_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("lexicon JSON: ") + e.what());
  }
  Lexicon lex;
  try {
    for (const auto& p : j.at("phonemes")) lex.phonemes.push_back(p.get<std::string>());
    if (j.contains("syllables"))
      for (const auto& [syl, phs] : j.at("syllables").items()) {
        std::vector<std::string> v;
        for (const auto& p : phs) v.push_back(p.get<std::string>());
        lex.syllables[syl] = std::move(v);
      }
  } catch (const json::exception& e) {
    throw ParseError(std::string("lexicon JSON: ") + e.what());
  }
  for (const auto& [syl, phs] : lex.syllables)
    for (const auto& p : phs)
      if (!lex.has_phoneme(p))
        throw DataError("syllable \"" + syl + "\" uses unknown phoneme \"" + p + "\"");
  return lex;
}

std::string lexicon_to_json(const Lexicon& lexicon) {
  json j;
  j["phonemes"] = lexicon.phonemes;
  j["syllables"] = json::object();
  for (const auto& [syl, phs] : lexicon.syllables) j["syllables"][syl] = phs;
  return j.dump(2);
}

Score load_score(const std::string& path) { return score_from_json(read_file(path)); }
Lexicon load_lexicon(const std::string& path) { return lexicon_from_json(read_file(path)); }

}  // namespace svs
