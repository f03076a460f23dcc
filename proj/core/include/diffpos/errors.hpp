#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace diffpos {

enum class ErrorCode {
  kDegenerateEdge,
  kCornerDiffraction,
  kNoSolution,
  kInvalidVector,
  kInvalidGeometry,
  kGrazingRay,
  kShadowBoundary,
  kDivergent,
  kNonDifferentiable,
  kNotIdentifiable,
  kDegenerateGeometry,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for the codes that describe an impossible or unsupported geometry.
bool is_geometry_error(ErrorCode code);

}  // namespace diffpos
