#include "luenid/error.hpp"

namespace luenid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotObservable: return "NotObservable";
    case ErrorCode::kInvalidQuadrature: return "InvalidQuadrature";
    case ErrorCode::kSpectrumOverlap: return "SpectrumOverlap";
    case ErrorCode::kSingularShift: return "SingularShift";
    case ErrorCode::kBoxTooLarge: return "BoxTooLarge";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kDegenerateReference: return "DegenerateReference";
    case ErrorCode::kDegenerateWindow: return "DegenerateWindow";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace luenid
