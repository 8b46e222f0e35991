#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gazecrop {

enum class ErrorCode {
  kEmptyTrace,
  kInvalidSigma,
  kZeroMass,
  kInvalidRho,
  kPolicyLargerThanImage,
  kOutOfBounds,
  kBadTarget,
  kEmptyInput,
  kModeMismatch,
  kUnsnappedView,
  kDegenerateRows,
  kZeroBaseline,
  kOutOfRange,
  kAllTies,
  kJudgeUnavailable,
  kMalformedJudgeResponse,
  kParseError,
  kValidationError,
  kMissingImage,
  kIoError,
  kNotFound,
  kUsage,
};

std::string_view error_code_name(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and used by the CLI and the Python bindings to classify errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gazecrop
