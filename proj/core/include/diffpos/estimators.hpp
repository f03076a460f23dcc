#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "diffpos/config.hpp"
#include "diffpos/fisher.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/vec3.hpp"

/// Range synthesis and position estimators: the diffraction-model nonlinear
/// least squares fit and the Euclidean linear least squares baseline.
namespace diffpos::estimators {

/// Axis-aligned box, lo <= hi elementwise.
struct Box {
  Point3 lo;
  Point3 hi;

  bool contains(const Point3& p) const;
  Point3 center() const;
  Point3 clamp(const Point3& p) const;
};

struct RangeMeasurementSet {
  std::vector<double> ranges;  ///< meters
  std::vector<double> sigma;   ///< per-anchor std used for weighting, meters
  std::vector<Point3> anchors;
  std::uint64_t seed = 0;
};

struct SynthesisOptions {
  /// Noise actually drawn is noise_scale * sigma_j; 0 gives exact ranges.
  double noise_scale = 1.0;
  /// Use straight-line distances instead of diffraction paths (model-matched
  /// data for the LLS baseline).
  bool euclidean = false;
  geometry::EdgeKind kind = geometry::EdgeKind::kUpper;
};

/// Independent stream seed for trial `stream` of a run seeded with `master`
/// (splitmix64 finaliser over the pair).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// ranges_j = p_j(truth) + noise_scale * sigma_j * N(0, 1), sigma_j =
/// c sqrt(CRLB_j). Deterministic for a given seed.
RangeMeasurementSet synthesize_ranges(const Point3& truth, std::span<const Point3> anchors,
                                      const geometry::Window& window,
                                      const fisher::RangingModel& model, std::uint64_t seed,
                                      const SynthesisOptions& options = {});

struct PositionEstimate {
  Point3 alpha_hat;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;  ///< |ranges - model(alpha_hat)|, meters
  double gradient_norm = 0.0;  ///< of the weighted cost at alpha_hat
  int restarts = 0;
};

struct NlsOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-8;       ///< meters
  double gradient_tolerance = 1e-10;  ///< weighted cost gradient
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  int restarts = 5;
  /// Iterates are clamped into this box when set.
  std::optional<Box> search_box;
  /// Nodes closer than this to the wall are pushed back to it.
  double min_depth = 1e-6;
  geometry::EdgeKind kind = geometry::EdgeKind::kUpper;
  Tolerances tol;
};

/// Levenberg-Marquardt on sum_j ((r_j - p_j(alpha)) / sigma_j)^2 with the
/// analytic path gradient. When the first run does not converge, restarts
/// from jittered copies of `init` and keeps the lowest-cost result. A
/// non-converged result is returned with converged = false (best iterate).
/// Throws NotIdentifiable for fewer than three anchors and a geometry error
/// when no valid start can be found.
PositionEstimate estimate_diffraction_nls(const RangeMeasurementSet& meas,
                                          const geometry::Window& window, const Point3& init,
                                          const NlsOptions& options = {});

enum class LlsVariant {
  /// Subtract the first anchor's squared-range equation from the others.
  /// With three anchors the 2-row system leaves a line, resolved against
  /// the first range sphere on the building side (largest y).
  kReferenceDifferencing,
  /// Minimum-norm solution of the differenced system (no sphere step).
  kMinimumNorm,
};

/// Euclidean trilateration. Throws DegenerateGeometry when the differenced
/// system is rank deficient beyond what the variant can resolve.
PositionEstimate estimate_lls_baseline(const RangeMeasurementSet& meas,
                                       LlsVariant variant = LlsVariant::kReferenceDifferencing);

}  // namespace diffpos::estimators
