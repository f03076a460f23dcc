#include "diffpos/errors.hpp"

namespace diffpos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateEdge: return "DegenerateEdge";
    case ErrorCode::kCornerDiffraction: return "CornerDiffraction";
    case ErrorCode::kNoSolution: return "NoSolution";
    case ErrorCode::kInvalidVector: return "InvalidVector";
    case ErrorCode::kInvalidGeometry: return "InvalidGeometry";
    case ErrorCode::kGrazingRay: return "GrazingRay";
    case ErrorCode::kShadowBoundary: return "ShadowBoundary";
    case ErrorCode::kDivergent: return "Divergent";
    case ErrorCode::kNonDifferentiable: return "NonDifferentiable";
    case ErrorCode::kNotIdentifiable: return "NotIdentifiable";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool is_geometry_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kIo:
      return false;
    default:
      return true;
  }
}

}  // namespace diffpos
