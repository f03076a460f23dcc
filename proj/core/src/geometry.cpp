#include "diffpos/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "diffpos/errors.hpp"

namespace diffpos::geometry {

namespace {

double sq(double v) { return v * v; }

void require_finite(const Point3& p, const char* what) {
  if (!is_finite(p)) {
    throw Error(ErrorCode::kInvalidGeometry, std::string(what) + " has non-finite coordinates");
  }
}

// Roots of a (near) double root carry only half the working precision.
constexpr double kDoubleRootBand = 1e-6;

// One Newton step on the signed law (q - x_a) sqrt(k_node) + (q - x_n)
// sqrt(k_anchor) = 0, which is linear in q.
double polish_root(const Point3& anchor, const Point3& node, const DiffractingEdge& edge, double lambda) {
  const double d = edge.x1 - edge.x2;
  const double root_kn = std::sqrt(sq(node.y) + sq(edge.z_e - node.z));
  const double root_ka = std::sqrt(sq(anchor.y) + sq(edge.z_e - anchor.z));
  const double q = edge.x2 + d * lambda;
  const double g = (q - anchor.x) * root_kn + (q - node.x) * root_ka;
  return (q - g / (root_kn + root_ka) - edge.x2) / d;
}

}  // namespace

const char* to_string(EdgeKind kind) { return kind == EdgeKind::kUpper ? "upper" : "lower"; }

DiffractingEdge build_edge_frame(EdgeKind kind, double x1, double x2, double z_e) {
  if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(z_e)) {
    throw Error(ErrorCode::kInvalidGeometry, "edge parameters must be finite");
  }
  if (x1 == x2) {
    throw Error(ErrorCode::kDegenerateEdge, "edge endpoints coincide (x1 == x2)");
  }
  DiffractingEdge edge{x1, x2, z_e, kind, {}};
  // Both half-planes face the outdoor side (-y). The lower wall hangs below
  // its edge, the upper wall rises above it.
  edge.frame.n0 = -axis::kY;
  edge.frame.e = kind == EdgeKind::kUpper ? axis::kX : -axis::kX;
  edge.frame.t0 = cross(edge.frame.n0, edge.frame.e);
  return edge;
}

EdgeQuadratic diffraction_quadratic(const Point3& anchor, const Point3& node,
                                    const DiffractingEdge& edge) {
  const double d = edge.x1 - edge.x2;
  // Squared perpendicular distances of node and anchor from the edge line.
  const double k_node = sq(node.y) + sq(edge.z_e - node.z);
  const double k_anchor = sq(anchor.y) + sq(edge.z_e - anchor.z);
  const double u_anchor = edge.x2 - anchor.x;
  const double u_node = edge.x2 - node.x;

  EdgeQuadratic quad;
  // (y_n^2 - y_a^2) + (z_n^2 - z_a^2) + 2 z_e (z_a - z_n) == k_node - k_anchor
  quad.a = sq(d) * (k_node - k_anchor);
  quad.b = 2.0 * d * (u_anchor * k_node - u_node * k_anchor);
  quad.c = sq(u_anchor) * k_node - sq(u_node) * k_anchor;
  return quad;
}

double keller_cone_angle(const Vec3& incident, const Vec3& edge, const Tolerances& tol) {
  if (!is_unit(incident, tol.unit_norm) || !is_unit(edge, tol.unit_norm)) {
    throw Error(ErrorCode::kInvalidVector, "keller_cone_angle expects unit vectors");
  }
  return std::acos(std::min(1.0, std::abs(dot(incident, edge))));
}

double diffraction_law_residual(const Point3& anchor, const Point3& node,
                                const DiffractingEdge& edge, const Point3& q) {
  const Vec3 incident = normalized(q - anchor);
  const Vec3 diffracted = normalized(node - q);
  return std::abs(dot(incident, edge.frame.e) - dot(diffracted, edge.frame.e));
}

DiffractionSolution solution_at(const Point3& anchor, const Point3& node,
                                const DiffractingEdge& edge, double lambda,
                                const Tolerances& tol) {
  DiffractionSolution sol;
  sol.lambda = lambda;
  sol.q = {lambda * edge.x1 + (1.0 - lambda) * edge.x2, 0.0, edge.z_e};
  sol.opl = distance(anchor, sol.q);
  sol.ipl = distance(sol.q, node);
  sol.path_length = sol.opl + sol.ipl;
  sol.gamma0 = keller_cone_angle(normalized(sol.q - anchor), edge.frame.e, tol);
  return sol;
}

DiffractionSolution solve_diffraction_point(const Point3& anchor, const Point3& node,
                                            const DiffractingEdge& edge,
                                            const Tolerances& tol) {
  require_finite(anchor, "anchor");
  require_finite(node, "node");
  if (anchor.y == 0.0 || node.y == 0.0) {
    throw Error(ErrorCode::kInvalidGeometry, "anchor and node must lie off the half-plane (y != 0)");
  }
  if ((anchor.y > 0.0) == (node.y > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "anchor and node must lie on opposite sides of Y=0");
  }

  const EdgeQuadratic quad = diffraction_quadratic(anchor, node, edge);
  const double d = edge.x1 - edge.x2;

  std::array<double, 2> roots{};
  std::size_t n_roots = 0;
  bool near_double_root = false;

  if (std::abs(quad.a) <= tol.degenerate_quadratic * std::max(std::abs(quad.b), std::abs(quad.c))) {
    // Equal perpendicular distances: the quadratic collapses to b*lambda + c.
    const double k_node = sq(node.y) + sq(edge.z_e - node.z);
    const double k_anchor = sq(anchor.y) + sq(edge.z_e - anchor.z);
    const double b_scale = 2.0 * std::abs(d) *
                           (std::abs(edge.x2 - anchor.x) * k_node + std::abs(edge.x2 - node.x) * k_anchor);
    if (std::abs(quad.b) <= tol.degenerate_quadratic * b_scale) {
      // a = b = c = 0: mirror-symmetric scene, the midpoint is the Fermat point.
      roots[n_roots++] = (0.5 * (anchor.x + node.x) - edge.x2) / d;
    } else {
      roots[n_roots++] = -quad.c / quad.b;
    }
  } else {
    double disc = quad.discriminant();
    const double disc_scale = std::max(quad.b * quad.b, std::abs(4.0 * quad.a * quad.c));
    if (disc < -tol.discriminant * disc_scale) {
      std::ostringstream msg;
      msg << "edge quadratic has negative discriminant " << disc;
      throw Error(ErrorCode::kNoSolution, msg.str());
    }
    disc = std::max(disc, 0.0);
    const double root_disc = std::sqrt(disc);
    near_double_root = root_disc <= kDoubleRootBand * std::abs(quad.b);
    // Cancellation-free pair of roots.
    const double t = -0.5 * (quad.b + std::copysign(root_disc, quad.b));
    if (t == 0.0) {
      roots[n_roots++] = 0.0;
    } else {
      roots[n_roots++] = t / quad.a;
      roots[n_roots++] = quad.c / t;
    }
  }

  const DiffractionSolution* best = nullptr;
  DiffractionSolution accepted[2];
  std::size_t n_accepted = 0;
  bool any_in_range = false;
  bool law_holds_off_edge = false;

  for (std::size_t i = 0; i < n_roots; ++i) {
    double lambda = roots[i];
    if (!std::isfinite(lambda)) continue;
    if (near_double_root) lambda = polish_root(anchor, node, edge, lambda);
    if (lambda < -tol.lambda_clamp || lambda > 1.0 + tol.lambda_clamp) {
      const Point3 q{lambda * edge.x1 + (1.0 - lambda) * edge.x2, 0.0, edge.z_e};
      if (diffraction_law_residual(anchor, node, edge, q) <= tol.law_residual) {
        law_holds_off_edge = true;
      }
      continue;
    }
    any_in_range = true;
    const double clamped = std::clamp(lambda, 0.0, 1.0);
    const DiffractionSolution sol = solution_at(anchor, node, edge, clamped, tol);
    if (diffraction_law_residual(anchor, node, edge, sol.q) > tol.law_residual) continue;
    accepted[n_accepted] = sol;
    if (best == nullptr || sol.path_length < best->path_length) best = &accepted[n_accepted];
    ++n_accepted;
  }

  if (best != nullptr) return *best;

  if (law_holds_off_edge || !any_in_range) {
    std::ostringstream msg;
    msg << "diffraction point lies beyond the edge endpoints [" << edge.x1 << ", " << edge.x2 << "]";
    throw Error(ErrorCode::kCornerDiffraction, msg.str());
  }
  throw Error(ErrorCode::kNoSolution, "no root of the edge quadratic satisfies the diffraction law");
}

double window_edge_height(const Point3& node, const Window& window, EdgeKind kind) {
  return kind == EdgeKind::kUpper ? node.z + 0.5 * window.height : node.z - 0.5 * window.height;
}

DiffractionSolution building_path_length(const Point3& anchor, const Point3& node,
                                         const Window& window, EdgeKind kind,
                                         const Tolerances& tol) {
  if (!(window.height > 0.0) || !std::isfinite(window.height)) {
    throw Error(ErrorCode::kInvalidGeometry, "window height must be positive");
  }
  if (!(anchor.y < 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "anchor must be outside the building (y < 0)");
  }
  if (!(node.y > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "node must be inside the building (y > 0)");
  }
  const DiffractingEdge edge =
      build_edge_frame(kind, window.x1, window.x2, window_edge_height(node, window, kind));
  return solve_diffraction_point(anchor, node, edge, tol);
}

}  // namespace diffpos::geometry
