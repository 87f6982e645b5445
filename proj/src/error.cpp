#include "framescope/error.hpp"

namespace framescope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::WeightSumOutOfRange: return "WeightSumOutOfRange";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::OddExponent: return "OddExponent";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InvalidRegularization: return "InvalidRegularization";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace framescope
