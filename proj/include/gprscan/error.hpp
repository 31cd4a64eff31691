#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gprscan {

enum class ErrorCode {
  MalformedFile,
  UnsupportedDepth,
  IoFailure,
  MalformedRow,
  PickOutOfBounds,
  ImageTooSmall,
  NoGroundPlane,
  BadWindowSize,
  WindowOutOfBounds,
  ClassMissing,
  LengthMismatch,
  MalformedModelFile,
  WindowDoesNotFit,
  InvalidSpec,
  InsufficientRoom,
  InvalidCounts,
  UnknownImageId,
  EmptySurvey,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::PickOutOfBounds: return "PickOutOfBounds";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::NoGroundPlane: return "NoGroundPlane";
    case ErrorCode::BadWindowSize: return "BadWindowSize";
    case ErrorCode::WindowOutOfBounds: return "WindowOutOfBounds";
    case ErrorCode::ClassMissing: return "ClassMissing";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MalformedModelFile: return "MalformedModelFile";
    case ErrorCode::WindowDoesNotFit: return "WindowDoesNotFit";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientRoom: return "InsufficientRoom";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::UnknownImageId: return "UnknownImageId";
    case ErrorCode::EmptySurvey: return "EmptySurvey";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gprscan
