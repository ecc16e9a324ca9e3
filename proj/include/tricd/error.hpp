#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tricd {

enum class ErrorCode {
  MissingFile,
  BadMagic,
  DimensionMismatch,
  ValueOutOfRange,
  IoFailure,
  EmptyDirectory,
  InconsistentDimensions,
  MalformedPpm,
  EmptyToolSet,
  TooSmall,
  IndivisibleDimensions,
  ShapeMismatch,
  FrameCountMismatch,
  BetaOutOfRange,
  NonScalarLoss,
  BadGamma,
  VocabOverflow,
  EmptyDataset,
  MalformedDocument,
  MalformedLine,
  DuplicateId,
  ConstraintViolation,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::InconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::MalformedPpm: return "MalformedPpm";
    case ErrorCode::EmptyToolSet: return "EmptyToolSet";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::IndivisibleDimensions: return "IndivisibleDimensions";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::BetaOutOfRange: return "BetaOutOfRange";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::BadGamma: return "BadGamma";
    case ErrorCode::VocabOverflow: return "VocabOverflow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace tricd
