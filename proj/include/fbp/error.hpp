#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fbp {

enum class ErrorCode {
  InvalidGrid,
  LengthMismatch,
  ShapeMismatch,
  DegenerateProjection,
  EmptyFrame,
  NegativeBinValue,
  InvalidArgument,
  ParseError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::EmptyFrame: return "EmptyFrame";
    case ErrorCode::NegativeBinValue: return "NegativeBinValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Library error. Every throwing entry point in fbp reports through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fbp
