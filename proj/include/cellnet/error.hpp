#pragma once

#include <stdexcept>
#include <string>

namespace cellnet {

enum class ErrorCode {
  InvalidGraph,
  DanglingBoundary,
  NotACycle,
  SelfLoopEdge,
  BadBoundarySize,
  BadDimension,
  UnknownCell,
  BadSpec,
  TooLarge,
  ShapeMismatch,
  MissingLabels,
  BadSkip,
  MalformedGraph6,
  ParseError,
  Diverged,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::DanglingBoundary: return "DanglingBoundary";
    case ErrorCode::NotACycle: return "NotACycle";
    case ErrorCode::SelfLoopEdge: return "SelfLoopEdge";
    case ErrorCode::BadBoundarySize: return "BadBoundarySize";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::BadSkip: return "BadSkip";
    case ErrorCode::MalformedGraph6: return "MalformedGraph6";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Diverged: return "Diverged";
  }
  return "Unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cellnet
