#include "svs/wav_io.h"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "svs/errors.h"

namespace svs {
namespace {

uint32_t read_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

uint16_t read_u16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

void put_u32(std::string& s, uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::string& s, uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    throw ParseError("not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    std::string id = buf.substr(pos, 4);
    uint32_t len = read_u32(buf.data() + pos + 4);
    size_t body = pos + 8;
    if (body + len > buf.size()) throw ParseError("truncated WAV chunk in " + path);
    if (id == "fmt ") {
      if (len < 16) throw ParseError("short fmt chunk in " + path);
      format = read_u16(buf.data() + body);
      channels = read_u16(buf.data() + body + 2);
      rate = read_u32(buf.data() + body + 4);
      bits = read_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || data_off == 0) throw ParseError("missing fmt/data chunk in " + path);
  if (format != 1 || bits != 16) throw ParseError("only PCM16 WAV is supported: " + path);
  if (channels != 1) throw ParseError("only mono WAV is supported: " + path);

  Waveform w;
  w.sample_rate = static_cast<double>(rate);
  size_t n = data_len / 2;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t s;
    std::memcpy(&s, buf.data() + data_off + 2 * i, 2);
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0.0) throw DomainError("sample rate must be positive");
  uint32_t rate = static_cast<uint32_t>(std::lround(w.sample_rate));
  uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 2);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);   // PCM
  put_u16(out, 1);   // mono
  put_u32(out, rate);
  put_u32(out, rate * 2);  // byte rate
  put_u16(out, 2);         // block align
  put_u16(out, 16);        // bits
  out += "data";
  put_u32(out, data_len);
  for (double v : w.samples) {
    // Same 1/32768 step as the reader, so a round trip only costs the
    // rounding itself.
    int32_t q = static_cast<int32_t>(std::lround(v * 32768.0));
    q = std::max<int32_t>(-32768, std::min<int32_t>(32767, q));
    int16_t s = static_cast<int16_t>(q);
    out.append(reinterpret_cast<const char*>(&s), 2);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot create WAV file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing WAV file: " + path);
}

}  // namespace svs
