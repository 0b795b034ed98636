#include "concentrix/errors.hpp"

namespace concentrix {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kInvalidSpec: return "invalid_spec";
    case ErrorKind::kNonFinite: return "non_finite";
    case ErrorKind::kNotContractive: return "not_contractive";
    case ErrorKind::kInvalidHypothesis: return "invalid_hypothesis";
    case ErrorKind::kHypothesisFailed: return "hypothesis_failed";
    case ErrorKind::kInvalidAlpha: return "invalid_alpha";
    case ErrorKind::kDivergentMgf: return "divergent_mgf";
    case ErrorKind::kNotPsd: return "not_psd";
    case ErrorKind::kUnsupportedDimension: return "unsupported_dimension";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kNoSignal: return "no_signal";
    case ErrorKind::kPrecisionUnreachable: return "precision_unreachable";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace concentrix
