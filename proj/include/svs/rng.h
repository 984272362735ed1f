#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace svs {

// Counter-based deterministic generator (SplitMix64 finalizer over a keyed
// counter).  State is two 64-bit words, so streams serialize into checkpoints
// exactly and the sequence is identical across platforms and compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : key_(mix_(seed ^ 0x8f2c3a1d5b7e9041ull)) {}

  uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ull;
    return mix_(key_ ^ counter_);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.  Modulo bias is below 2^-50 for
  // any range that fits in 32 bits.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent child stream addressed by label; forking does not advance
  // this stream.
  Rng fork(std::string_view label) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    Rng child;
    child.key_ = mix_(key_ ^ mix_(h));
    child.counter_ = 0;
    return child;
  }

  Rng fork(uint64_t index) const {
    Rng child;
    child.key_ = mix_(key_ ^ mix_(index + 0x71a3c587b92d40efull));
    child.counter_ = 0;
    return child;
  }

  // Raw state, for checkpointing.
  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  static Rng from_state(uint64_t key, uint64_t counter) {
    Rng r;
    r.key_ = key;
    r.counter_ = counter;
    return r;
  }

 private:
  static uint64_t mix_(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace svs
