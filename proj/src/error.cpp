#include "fif/error.hpp"

namespace fif {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingularFov: return "SingularFov";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::OutOfField: return "OutOfField";
    case ErrorCode::WrongFactorKind: return "WrongFactorKind";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::SingularCostMatrix: return "SingularCostMatrix";
  }
  return "Unknown";
}

}  // namespace fif
