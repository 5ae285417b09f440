#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace luenid {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kNotObservable,
  kInvalidQuadrature,
  kSpectrumOverlap,
  kSingularShift,
  kBoxTooLarge,
  kUnstable,
  kDegenerateReference,
  kDegenerateWindow,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace luenid
