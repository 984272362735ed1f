#pragma once

#include <stdexcept>
#include <string>

namespace svs {

// Malformed textual input (note names, JSON scores, file headers).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Value outside its documented range (MIDI numbers, embedding ids).
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mathematically invalid argument (non-positive tempo, zero-length note).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or length disagreement between values that must line up.
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or inconsistent corpus data (lexicon misses, bad alignments).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid model or training configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File I/O failure (unreadable WAV, truncated checkpoint).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace svs
