#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace grasshopper {

/// Failure categories surfaced by the library. The CLI serializes the
/// enumerator name verbatim into its machine-readable error object.
enum class ErrorCode {
  MalformedFile,
  NonUnitPoint,
  DuplicateSite,
  NoAntipodalStructure,
  NonConvergence,
  JumpUnresolvable,
  OddSiteCount,
  GridMismatch,
  InvalidMove,
  InvalidArgument,
  SymmetryIncompatible,
  CutoffMismatch,
  DegenerateBoundary,
  NoStripeStructure,
  InvalidGeometry,
  TangencyUnresolved,
  QuadratureNotConverged,
  UnknownCommand,
  BadFlag,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace grasshopper
