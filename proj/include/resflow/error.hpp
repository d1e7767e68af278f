#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resflow {

enum class Errc {
  MissingFile,
  ParseError,
  DuplicateId,
  SplitLeak,
  FrameCountMismatch,
  DecodeError,
  InconsistentDimensions,
  EmptySequence,
  IoError,
  DimensionMismatch,
  SequenceTooShort,
  BadMagic,
  TruncatedFile,
  OversizeDimensions,
  InvalidField,
  TooFewFlows,
  InvalidConfig,
  ModalityMismatch,
  ShapeMismatch,
  EmptyBatch,
  EmptyList,
  EmptySplit,
  CorruptCheckpoint,
  VersionMismatch,
  InvalidWeights,
  EmptyInput,
  SingleClass,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MissingFile: return "MissingFile";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::SplitLeak: return "SplitLeak";
    case Errc::FrameCountMismatch: return "FrameCountMismatch";
    case Errc::DecodeError: return "DecodeError";
    case Errc::InconsistentDimensions: return "InconsistentDimensions";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::IoError: return "IoError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SequenceTooShort: return "SequenceTooShort";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::OversizeDimensions: return "OversizeDimensions";
    case Errc::InvalidField: return "InvalidField";
    case Errc::TooFewFlows: return "TooFewFlows";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ModalityMismatch: return "ModalityMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::EmptyList: return "EmptyList";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InvalidWeights: return "InvalidWeights";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SingleClass: return "SingleClass";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and testable; the
/// message carries context (paths, line numbers, shapes).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace resflow
