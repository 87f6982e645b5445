#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace framescope {

enum class ErrorCode {
  DimensionMismatch,
  NegativeWeight,
  WeightSumOutOfRange,
  InvalidExponent,
  OddExponent,
  NonFinite,
  NotSymmetric,
  SolverFailure,
  NonConvergence,
  InvalidRegularization,
  InvalidArgument,
  PreconditionViolated,
  IndexOutOfRange,
  GenerationFailed,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (CLI, Python bindings) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace framescope
