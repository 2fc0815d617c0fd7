#pragma once

#include <stdexcept>
#include <string>

namespace qsgan {

enum class ErrorKind {
  ZeroVector,
  BadLength,
  DimMismatch,
  BadQubitSet,
  NonFinite,
  BadDepth,
  BadDimension,
  NegativeNorm,
  EmptyBatch,
  WindowNotCovered,
  LengthMismatch,
  TooManyMutations,
  BadShape,
  BadConfig,
  BadCheckpoint,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::BadLength: return "BadLength";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::BadQubitSet: return "BadQubitSet";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::BadDepth: return "BadDepth";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::NegativeNorm: return "NegativeNorm";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::WindowNotCovered: return "WindowNotCovered";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooManyMutations: return "TooManyMutations";
    case ErrorKind::BadShape: return "BadShape";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BadCheckpoint: return "BadCheckpoint";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace qsgan
