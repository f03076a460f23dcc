#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "diffpos/config.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/vec3.hpp"

/// Ranging bounds, path-length Jacobians and Fisher information for window
/// diffraction positioning.
namespace diffpos::fisher {

/// TOF ranging model: one SNR per anchor (linear), common bandwidth.
struct RangingModel {
  double bandwidth_hz = 100e6;
  std::vector<double> snr_linear;
  double speed_of_light = kSpeedOfLight;

  static RangingModel uniform(double bandwidth_hz, double snr_linear, std::size_t anchors);

  /// Throws InvalidGeometry when the bandwidth or an SNR is not positive.
  void validate() const;
};

double db_to_linear(double db);

/// Delay CRLB of the first arriving path, 1 / (8 pi^2 beta^2 SNR_j), in s^2.
double delay_crlb(const RangingModel& model, std::size_t anchor_index);

/// Range standard deviation implied by the delay CRLB, c * sqrt(CRLB), meters.
double range_sigma(const RangingModel& model, std::size_t anchor_index);

/// d p / d(x_n, y_n, z_n) for the window-edge diffraction path, by the chain
/// rule through the diffraction point q_x. Throws CornerDiffraction when no
/// edge path exists and NonDifferentiable when q sits on an edge endpoint.
Vec3 path_gradient(const Point3& anchor, const Point3& node, const geometry::Window& window,
                   geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                   const Tolerances& tol = {});

/// d q_x / d(x_n, y_n, z_n), differentiating the selected root of the edge
/// quadratic. Near a double root the squared equation is singular and the
/// unsquared stationarity condition is differentiated instead.
Vec3 diffraction_point_sensitivity(const Point3& anchor, const Point3& node,
                                   const geometry::Window& window,
                                   geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                                   const Tolerances& tol = {});

/// 3 x M Jacobian, one path gradient per anchor column.
Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(std::span<const Point3> anchors,
                                                  const Point3& node,
                                                  const geometry::Window& window,
                                                  geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                                                  const Tolerances& tol = {});

/// Rank by singular values: sigma_i < tol * sigma_max counts as zero.
int numerical_rank(const Eigen::MatrixXd& m, double rank_ratio);

struct FisherReport {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian;
  Eigen::Matrix3d fim = Eigen::Matrix3d::Zero();  ///< 1/m^2
  int rank = 0;
  std::optional<double> peb_3d;  ///< sqrt(trace(FIM^-1)), meters
  std::optional<double> peb_z;   ///< sqrt((FIM^-1)[z,z]), meters
  double condition_number = 0.0;
  bool ill_conditioned = false;

  bool identifiable() const { return rank == 3; }
};

/// FIM = J diag(1 / sigma_j^2) J^T with sigma_j = c sqrt(CRLB_j). When the
/// rank is below 3 the report carries the rank and no PEBs (not an
/// exception). PEBs are still reported for ill-conditioned matrices, with the
/// flag set.
FisherReport build_fim(std::span<const Point3> anchors, const Point3& node,
                       const geometry::Window& window, const RangingModel& model,
                       geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                       const Tolerances& tol = {});

struct Identifiability {
  bool identifiable = false;
  int rank = 0;
};

/// Rank verdict from the unit-weight FIM (weights do not change the rank).
Identifiability identifiability(std::span<const Point3> anchors, const Point3& node,
                                const geometry::Window& window,
                                geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                                const Tolerances& tol = {});

}  // namespace diffpos::fisher
