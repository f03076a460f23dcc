#pragma once

#include <array>

#include "diffpos/config.hpp"
#include "diffpos/vec3.hpp"

/// Edge-diffraction geometry for a horizontal half-plane edge lying in the
/// wall plane Y=0, and its specialisation to a building window.
namespace diffpos::geometry {

enum class EdgeKind { kUpper, kLower };

const char* to_string(EdgeKind kind);

/// Edge-fixed orthonormal frame. n0 is the half-plane normal pointing to the
/// source side, t0 = n0 x e points away from the edge along the half-plane.
struct EdgeFrame {
  Vec3 e;
  Vec3 n0;
  Vec3 t0;
};

struct DiffractingEdge {
  double x1 = 0.0;
  double x2 = 0.0;
  double z_e = 0.0;
  EdgeKind kind = EdgeKind::kUpper;
  EdgeFrame frame;

  Point3 endpoint1() const { return {x1, 0.0, z_e}; }
  Point3 endpoint2() const { return {x2, 0.0, z_e}; }
};

/// Window opening of the simplified building: the upper and lower edges sit
/// height/2 above and below the node's floor midpoint and span [x1, x2].
struct Window {
  double height = 2.0;
  double x1 = -10.0;
  double x2 = 10.0;
};

struct DiffractionSolution {
  Point3 q;             ///< diffraction point on the edge
  double lambda = 0.0;  ///< q = lambda * X1 + (1 - lambda) * X2
  double opl = 0.0;     ///< |anchor - q|
  double ipl = 0.0;     ///< |q - node|
  double path_length = 0.0;
  double gamma0 = 0.0;  ///< Keller cone half-angle, radians
};

/// Coefficients of a*lambda^2 + b*lambda + c = 0 whose roots locate the
/// diffraction point along the edge.
struct EdgeQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double discriminant() const { return b * b - 4.0 * a * c; }
};

/// Throws DegenerateEdge when x1 == x2.
DiffractingEdge build_edge_frame(EdgeKind kind, double x1, double x2, double z_e);

EdgeQuadratic diffraction_quadratic(const Point3& anchor, const Point3& node,
                                    const DiffractingEdge& edge);

/// Diffraction point for a source and observer on opposite sides of the
/// half-plane. Selects the root of the edge quadratic that lies on the edge
/// and satisfies the signed diffraction law; the squared equation also carries
/// a spurious root with the rays running in opposite directions along the
/// edge. Throws CornerDiffraction when the true diffraction point falls
/// outside the edge, NoSolution when the quadratic has no admissible root.
DiffractionSolution solve_diffraction_point(const Point3& anchor, const Point3& node,
                                            const DiffractingEdge& edge,
                                            const Tolerances& tol = {});

/// Builds the solution record for a given convex weight (no root finding).
DiffractionSolution solution_at(const Point3& anchor, const Point3& node,
                                const DiffractingEdge& edge, double lambda,
                                const Tolerances& tol = {});

/// |s'.e - s.e| for the rays through q.
double diffraction_law_residual(const Point3& anchor, const Point3& node,
                                const DiffractingEdge& edge, const Point3& q);

/// Edge height for the window edge on the node's floor.
double window_edge_height(const Point3& node, const Window& window, EdgeKind kind);

/// Window-edge diffraction path from an outdoor anchor (y<0) to an indoor
/// node (y>0).
DiffractionSolution building_path_length(const Point3& anchor, const Point3& node,
                                         const Window& window, EdgeKind kind,
                                         const Tolerances& tol = {});

/// arccos(|s'.e|), in [0, pi/2]. Throws InvalidVector for non-unit input.
double keller_cone_angle(const Vec3& incident, const Vec3& edge, const Tolerances& tol = {});

}  // namespace diffpos::geometry
