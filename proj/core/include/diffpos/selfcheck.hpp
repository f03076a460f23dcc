#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffpos {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Oracle and property checks over `scenes` random geometries: closed-form
/// diffraction point vs golden-section search, analytic Jacobian vs finite
/// differences, ranging bound anchor, power ratio anchors, identifiability
/// cases, frame orthonormality, noiseless estimator recovery.
std::vector<CheckResult> run_self_check(std::uint64_t seed, std::size_t scenes = 1000);

}  // namespace diffpos
