#include "error.hpp"

namespace scoopflow {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateTransport: return "DegenerateTransport";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace scoopflow
