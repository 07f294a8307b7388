#pragma once

#include <stdexcept>
#include <string>

namespace fif {

enum class ErrorCode {
  InvalidArgument,
  DegeneratePoint,
  TooFewSamples,
  SingularFov,
  SingularGram,
  EmptyGrid,
  OutOfField,
  WrongFactorKind,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  IoError,
  NoPath,
  SingularCostMatrix,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library. The C API maps `code()` onto
/// `fif_status` values one to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fif
