#include "gazecrop/error.hpp"

namespace gazecrop {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyTrace: return "EmptyTrace";
    case ErrorCode::kInvalidSigma: return "InvalidSigma";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kInvalidRho: return "InvalidRho";
    case ErrorCode::kPolicyLargerThanImage: return "PolicyLargerThanImage";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kBadTarget: return "BadTarget";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kModeMismatch: return "ModeMismatch";
    case ErrorCode::kUnsnappedView: return "UnsnappedView";
    case ErrorCode::kDegenerateRows: return "DegenerateRows";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kAllTies: return "AllTies";
    case ErrorCode::kJudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::kMalformedJudgeResponse: return "MalformedJudgeResponse";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kMissingImage: return "MissingImage";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kUsage: return "Usage";
  }
  return "Unknown";
}

}  // namespace gazecrop
