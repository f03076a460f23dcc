#include "diffpos/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace diffpos::oracles {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename F>
Vec3 central_difference(const Point3& node, double step, F&& f) {
  auto axis_diff = [&](Vec3 dir) {
    return (f(node + dir * step) - f(node + dir * -step)) / (2.0 * step);
  };
  return {axis_diff(axis::kX), axis_diff(axis::kY), axis_diff(axis::kZ)};
}

}  // namespace

double edge_path_length(const Point3& anchor, const Point3& node, const geometry::DiffractingEdge& edge,
                        double q_x) {
  const Point3 q{q_x, 0.0, edge.z_e};
  return distance(anchor, q) + distance(q, node);
}

LineSearchResult golden_section_path(const Point3& anchor, const Point3& node,
                                     const geometry::DiffractingEdge& edge, double bracket,
                                     double endpoint_margin) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo0 = std::min(edge.x1, edge.x2);
  const double hi0 = std::max(edge.x1, edge.x2);
  double lo = lo0;
  double hi = hi0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = edge_path_length(anchor, node, edge, c);
  double fd = edge_path_length(anchor, node, edge, d);
  while (hi - lo > bracket) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = edge_path_length(anchor, node, edge, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = edge_path_length(anchor, node, edge, d);
    }
    if (c >= d) break;  // bracket below the spacing of doubles
  }
  LineSearchResult out;
  out.q_x = 0.5 * (lo + hi);
  out.path_length = edge_path_length(anchor, node, edge, out.q_x);
  out.at_endpoint = out.q_x - lo0 <= endpoint_margin || hi0 - out.q_x <= endpoint_margin;
  return out;
}

Vec3 finite_difference_gradient(const Point3& anchor, const Point3& node,
                                const geometry::Window& window, geometry::EdgeKind kind,
                                double step) {
  return central_difference(node, step, [&](const Point3& p) {
    return geometry::building_path_length(anchor, p, window, kind).path_length;
  });
}

Vec3 finite_difference_sensitivity(const Point3& anchor, const Point3& node,
                                   const geometry::Window& window, geometry::EdgeKind kind,
                                   double step) {
  return central_difference(node, step, [&](const Point3& p) {
    return geometry::building_path_length(anchor, p, window, kind).q.x;
  });
}

BuildingScene random_building_scene(std::mt19937_64& rng) {
  BuildingScene s;
  s.anchor = {uniform(rng, -10.0, 10.0), uniform(rng, -40.0, -2.0), uniform(rng, -25.0, 15.0)};
  s.node = {uniform(rng, -9.5, 9.5), uniform(rng, 0.5, 25.0), uniform(rng, 1.0, 45.0)};
  return s;
}

EdgeScene random_edge_scene(std::mt19937_64& rng) {
  EdgeScene s;
  const double x1 = uniform(rng, -30.0, 0.0);
  const double x2 = uniform(rng, 1.0, 30.0);
  const auto kind = uniform(rng, 0.0, 1.0) < 0.5 ? geometry::EdgeKind::kUpper : geometry::EdgeKind::kLower;
  s.edge = geometry::build_edge_frame(kind, x1, x2, uniform(rng, -10.0, 30.0));
  s.anchor = {uniform(rng, -40.0, 40.0), uniform(rng, -40.0, -0.5), uniform(rng, -20.0, 40.0)};
  s.node = {uniform(rng, -40.0, 40.0), uniform(rng, 0.5, 40.0), uniform(rng, -20.0, 40.0)};
  return s;
}

}  // namespace diffpos::oracles
