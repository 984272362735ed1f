#pragma once

#include <string>
#include <vector>

namespace svs {

struct Waveform {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  double sample_rate = 48000.0;
};

// PCM16 mono RIFF only; anything else is an error, resampling is out of scope.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace svs
