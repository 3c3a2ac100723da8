#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace layerscope {

enum class ErrorCode {
  FormatError,
  CountMismatch,
  NonfiniteValue,
  UnknownFeature,
  DegenerateInput,
  UnknownProjection,
  EmptySelection,
  TooFewPoints,
  TooManyPoints,
  KOutOfRange,
  EmptyCluster,
  OutOfRange,
  MissingPosition,
  InvalidConfig,
  UnknownDataset,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FormatError: return "FORMAT_ERROR";
    case ErrorCode::CountMismatch: return "COUNT_MISMATCH";
    case ErrorCode::NonfiniteValue: return "NONFINITE_VALUE";
    case ErrorCode::UnknownFeature: return "UNKNOWN_FEATURE";
    case ErrorCode::DegenerateInput: return "DEGENERATE_INPUT";
    case ErrorCode::UnknownProjection: return "UNKNOWN_PROJECTION";
    case ErrorCode::EmptySelection: return "EMPTY_SELECTION";
    case ErrorCode::TooFewPoints: return "TOO_FEW_POINTS";
    case ErrorCode::TooManyPoints: return "TOO_MANY_POINTS";
    case ErrorCode::KOutOfRange: return "K_OUT_OF_RANGE";
    case ErrorCode::EmptyCluster: return "EMPTY_CLUSTER";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::MissingPosition: return "MISSING_POSITION";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::UnknownDataset: return "UNKNOWN_DATASET";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Exception carrying one of the library's error codes. `what()` is
/// "<CODE>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace layerscope
