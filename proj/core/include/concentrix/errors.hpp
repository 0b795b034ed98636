#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace concentrix {

/// Machine-readable category carried by every library exception. The CLI maps
/// these to exit codes and to the `kind` field of its error JSON.
enum class ErrorKind {
  kDimensionMismatch,
  kInvalidSpec,
  kNonFinite,
  kNotContractive,
  kInvalidHypothesis,
  kHypothesisFailed,
  kInvalidAlpha,
  kDivergentMgf,
  kNotPsd,
  kUnsupportedDimension,
  kInvalidArgument,
  kNoSignal,
  kPrecisionUnreachable,
  kConfig,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace concentrix
