#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpb {

enum class ErrorCode {
  DegenerateGeometry,
  ShapeMismatch,
  EmptyComponent,
  InvalidMaze,
  InfeasibleRange,
  ScheduleError,
  InvalidLayout,
  ParseError,
  MissingFrame,
  EmptySequence,
  VersionError,
  InvalidManifest,
  TaskMismatch,
  TrackingFailure,
  PaletteError,
  SilhouetteError,
  CorrelationUndefined,
  UsageError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyComponent: return "EmptyComponent";
    case ErrorCode::InvalidMaze: return "InvalidMaze";
    case ErrorCode::InfeasibleRange: return "InfeasibleRange";
    case ErrorCode::ScheduleError: return "ScheduleError";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingFrame: return "MissingFrame";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::TaskMismatch: return "TaskMismatch";
    case ErrorCode::TrackingFailure: return "TrackingFailure";
    case ErrorCode::PaletteError: return "PaletteError";
    case ErrorCode::SilhouetteError: return "SilhouetteError";
    case ErrorCode::CorrelationUndefined: return "CorrelationUndefined";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace fpb
