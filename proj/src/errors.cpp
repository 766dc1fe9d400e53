#include "tsipa/errors.hpp"

namespace tsipa {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kUnderdetermined: return "underdetermined";
    case ErrorCode::kSingularGeometry: return "singular_geometry";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kDegenerateInput: return "degenerate_input";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace tsipa
