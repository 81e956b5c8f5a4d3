#include "mfst/errors.hpp"

namespace mfst {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Overlap: return "OverlapError";
    case ErrorCode::Boundary: return "BoundaryError";
    case ErrorCode::Ratio: return "RatioError";
    case ErrorCode::ZeroGap: return "ZeroGapError";
    case ErrorCode::Capacity: return "CapacityError";
    case ErrorCode::EmptyInterval: return "EmptyIntervalError";
    case ErrorCode::NegativeQUnenlarged: return "NegativeQUnenlargedError";
    case ErrorCode::InsufficientScales: return "InsufficientScalesError";
    case ErrorCode::Bracket: return "BracketError";
    case ErrorCode::TooFewValues: return "TooFewValuesError";
    case ErrorCode::NonConverged: return "NonConvergedError";
    case ErrorCode::ZeroMeasureSide: return "ZeroMeasureSideError";
    case ErrorCode::InvalidArgument: return "InvalidArgumentError";
  }
  return "UnknownError";
}

void raise(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_name(code)) + ": " + what);
}

}  // namespace mfst
