#pragma once

#include <cstdint>
#include <random>

#include "diffpos/geometry.hpp"
#include "diffpos/vec3.hpp"

/// Independent reference computations used to validate the closed forms:
/// direct path-length minimisation and finite differences.
namespace diffpos::oracles {

/// |anchor - Q| + |Q - node| with Q = (q_x, 0, z_e) on the edge line.
double edge_path_length(const Point3& anchor, const Point3& node, const geometry::DiffractingEdge& edge,
                        double q_x);

struct LineSearchResult {
  double q_x = 0.0;
  double path_length = 0.0;
  /// Minimiser within `endpoint_margin` of x1 or x2: the unconstrained
  /// optimum lies off the edge (or on its endpoint).
  bool at_endpoint = false;
};

/// Golden-section minimisation of the path length over q_x in [x1, x2] until
/// the bracket is narrower than `bracket`.
LineSearchResult golden_section_path(const Point3& anchor, const Point3& node,
                                     const geometry::DiffractingEdge& edge, double bracket = 1e-12,
                                     double endpoint_margin = 1e-7);

/// Central differences of the building path length with respect to the node
/// coordinates.
Vec3 finite_difference_gradient(const Point3& anchor, const Point3& node,
                                const geometry::Window& window,
                                geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                                double step = 1e-5);

/// Central differences of the diffraction point q_x.
Vec3 finite_difference_sensitivity(const Point3& anchor, const Point3& node,
                                   const geometry::Window& window,
                                   geometry::EdgeKind kind = geometry::EdgeKind::kUpper,
                                   double step = 1e-5);

struct BuildingScene {
  Point3 anchor;
  Point3 node;
  geometry::Window window;
};

/// Random anchor outside / node inside a 2 m window spanning [-10, 10]: anchor
/// x in [-10, 10], y in [-40, -2], z in [-25, 15]; node x in [-9.5, 9.5],
/// y in [0.5, 25], z in [1, 45]. Both lie over the edge span, so the
/// diffraction point always falls on the edge.
BuildingScene random_building_scene(std::mt19937_64& rng);

struct EdgeScene {
  Point3 anchor;
  Point3 node;
  geometry::DiffractingEdge edge;
};

/// Random half-plane scene with an arbitrary edge span; the diffraction point
/// may fall off the edge.
EdgeScene random_edge_scene(std::mt19937_64& rng);

}  // namespace diffpos::oracles
