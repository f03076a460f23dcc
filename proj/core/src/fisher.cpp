#include "diffpos/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "diffpos/errors.hpp"

namespace diffpos::fisher {

namespace {

double sq(double v) { return v * v; }

// d/d(x_n, y_n, z_n) of one coefficient of the edge quadratic.
struct CoefficientPartials {
  Vec3 a;
  Vec3 b;
  Vec3 c;
};

struct EdgeSetup {
  geometry::DiffractingEdge edge;
  geometry::DiffractionSolution solution;
};

EdgeSetup solve_window_edge(const Point3& anchor, const Point3& node, const geometry::Window& window,
                            geometry::EdgeKind kind, const Tolerances& tol) {
  EdgeSetup setup;
  setup.solution = geometry::building_path_length(anchor, node, window, kind, tol);
  setup.edge = geometry::build_edge_frame(kind, window.x1, window.x2,
                                          geometry::window_edge_height(node, window, kind));
  if (setup.solution.lambda <= tol.lambda_clamp || setup.solution.lambda >= 1.0 - tol.lambda_clamp) {
    throw Error(ErrorCode::kNonDifferentiable, "diffraction point sits on an edge endpoint");
  }
  return setup;
}

// The edge moves with the node (z_e = z_n +- w/2), so k_anchor depends on z_n
// while k_node = y_n^2 + w^2/4 does not.
CoefficientPartials quadratic_partials(const Point3& anchor, const Point3& node,
                                       const geometry::DiffractingEdge& edge) {
  const double d = edge.x1 - edge.x2;
  const double h = edge.z_e - anchor.z;
  const double k_anchor = sq(anchor.y) + sq(h);
  const double u_anchor = edge.x2 - anchor.x;
  const double u_node = edge.x2 - node.x;

  CoefficientPartials p;
  p.a = {0.0, 2.0 * node.y * sq(d), -2.0 * sq(d) * h};
  p.b = {2.0 * d * k_anchor, 4.0 * node.y * d * u_anchor, -4.0 * d * u_node * h};
  p.c = {2.0 * u_node * k_anchor, 2.0 * node.y * sq(u_anchor), -2.0 * sq(u_node) * h};
  return p;
}

// Implicit derivative of (q - x_a) sqrt(k_node) + (q - x_n) sqrt(k_anchor) = 0,
// the signed (unsquared) diffraction law. Regular everywhere on the edge.
Vec3 stationarity_sensitivity(const Point3& anchor, const Point3& node, double q, double z_e) {
  const double h = z_e - anchor.z;
  const double root_kn = std::sqrt(sq(node.y) + sq(z_e - node.z));
  const double root_ka = std::sqrt(sq(anchor.y) + sq(h));
  const double dg_dq = root_kn + root_ka;
  const Vec3 dg{-root_ka, (q - anchor.x) * node.y / root_kn, (q - node.x) * h / root_ka};
  return -dg / dg_dq;
}

Vec3 sensitivity_from_setup(const Point3& anchor, const Point3& node, const EdgeSetup& setup) {
  const geometry::DiffractingEdge& edge = setup.edge;
  const geometry::EdgeQuadratic quad = geometry::diffraction_quadratic(anchor, node, edge);
  const double d = edge.x1 - edge.x2;
  const double root_disc = std::sqrt(std::max(quad.discriminant(), 0.0));
  const double scale = std::max(std::abs(quad.b), std::sqrt(std::abs(4.0 * quad.a * quad.c)));

  // The root formula is differentiable only away from a double root and away
  // from the linear (a -> 0) limit.
  constexpr double kConditioning = 1e-7;
  const bool regular = std::abs(quad.a) > kConditioning * std::max(std::abs(quad.b), std::abs(quad.c)) &&
                       root_disc > kConditioning * scale;
  if (!regular) {
    return stationarity_sensitivity(anchor, node, setup.solution.q.x, edge.z_e);
  }

  // Which sign of +-sqrt(D) produced the selected root.
  const double lambda = setup.solution.lambda;
  const double r_plus = (-quad.b + root_disc) / (2.0 * quad.a);
  const double r_minus = (-quad.b - root_disc) / (2.0 * quad.a);
  const double sign = std::abs(lambda - r_plus) <= std::abs(lambda - r_minus) ? 1.0 : -1.0;

  const CoefficientPartials p = quadratic_partials(anchor, node, edge);
  auto dlambda = [&](double da, double db, double dc) {
    const double d_disc_half = quad.b * db - 2.0 * quad.c * da - 2.0 * quad.a * dc;
    return (da * (quad.b - sign * root_disc) / quad.a - db + sign * d_disc_half / root_disc) /
           (2.0 * quad.a);
  };
  return Vec3{dlambda(p.a.x, p.b.x, p.c.x), dlambda(p.a.y, p.b.y, p.c.y),
              dlambda(p.a.z, p.b.z, p.c.z)} *
         d;
}

}  // namespace

RangingModel RangingModel::uniform(double bandwidth_hz, double snr_linear, std::size_t anchors) {
  RangingModel model;
  model.bandwidth_hz = bandwidth_hz;
  model.snr_linear.assign(anchors, snr_linear);
  return model;
}

void RangingModel::validate() const {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw Error(ErrorCode::kInvalidGeometry, "bandwidth must be positive");
  }
  if (!(speed_of_light > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "propagation speed must be positive");
  }
  for (double snr : snr_linear) {
    if (!(snr > 0.0) || !std::isfinite(snr)) {
      throw Error(ErrorCode::kInvalidGeometry, "SNR must be positive");
    }
  }
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double delay_crlb(const RangingModel& model, std::size_t anchor_index) {
  model.validate();
  if (anchor_index >= model.snr_linear.size()) {
    throw Error(ErrorCode::kInvalidGeometry, "anchor index out of range for ranging model");
  }
  return 1.0 / (8.0 * sq(kPi) * sq(model.bandwidth_hz) * model.snr_linear[anchor_index]);
}

double range_sigma(const RangingModel& model, std::size_t anchor_index) {
  return model.speed_of_light * std::sqrt(delay_crlb(model, anchor_index));
}

Vec3 diffraction_point_sensitivity(const Point3& anchor, const Point3& node,
                                   const geometry::Window& window, geometry::EdgeKind kind,
                                   const Tolerances& tol) {
  const EdgeSetup setup = solve_window_edge(anchor, node, window, kind, tol);
  return sensitivity_from_setup(anchor, node, setup);
}

Vec3 path_gradient(const Point3& anchor, const Point3& node, const geometry::Window& window,
                   geometry::EdgeKind kind, const Tolerances& tol) {
  const EdgeSetup setup = solve_window_edge(anchor, node, window, kind, tol);
  const Vec3 dq = sensitivity_from_setup(anchor, node, setup);

  const double q = setup.solution.q.x;
  const double opl = setup.solution.opl;
  const double ipl = setup.solution.ipl;
  const double outside = (q - anchor.x) / opl;  // d OPL / d q

  Vec3 grad;
  grad.x = outside * dq.x + (node.x - q) * (1.0 - dq.x) / ipl;
  grad.y = outside * dq.y + ((q - node.x) * dq.y + node.y) / ipl;
  // The edge rides with the node, so OPL also depends on z_n directly.
  grad.z = outside * dq.z + (setup.edge.z_e - anchor.z) / opl + (q - node.x) * dq.z / ipl;
  return grad;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(std::span<const Point3> anchors,
                                                  const Point3& node,
                                                  const geometry::Window& window,
                                                  geometry::EdgeKind kind, const Tolerances& tol) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> j(3, static_cast<Eigen::Index>(anchors.size()));
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    j.col(static_cast<Eigen::Index>(i)) = to_eigen(path_gradient(anchors[i], node, window, kind, tol));
  }
  return j;
}

int numerical_rank(const Eigen::MatrixXd& m, double rank_ratio) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) >= rank_ratio * sv(0)) ++rank;
  }
  return rank;
}

FisherReport build_fim(std::span<const Point3> anchors, const Point3& node,
                       const geometry::Window& window, const RangingModel& model,
                       geometry::EdgeKind kind, const Tolerances& tol) {
  if (anchors.empty()) {
    throw Error(ErrorCode::kInvalidGeometry, "at least one anchor is required");
  }
  model.validate();
  if (model.snr_linear.size() != anchors.size()) {
    throw Error(ErrorCode::kInvalidGeometry,
                "ranging model has " + std::to_string(model.snr_linear.size()) + " SNR values for " +
                    std::to_string(anchors.size()) + " anchors");
  }

  FisherReport report;
  report.jacobian = jacobian(anchors, node, window, kind, tol);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double sigma = range_sigma(model, i);
    const Eigen::Vector3d g = report.jacobian.col(static_cast<Eigen::Index>(i));
    report.fim.noalias() += g * g.transpose() / sq(sigma);
  }
  report.rank = numerical_rank(report.jacobian, tol.rank_ratio);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(report.fim, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  report.condition_number = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();

  if (report.rank == 3) {
    report.ill_conditioned = report.condition_number > tol.ill_conditioned;
    const Eigen::Matrix3d inverse = report.fim.ldlt().solve(Eigen::Matrix3d::Identity());
    report.peb_3d = std::sqrt(inverse.trace());
    report.peb_z = std::sqrt(inverse(2, 2));
  }
  return report;
}

Identifiability identifiability(std::span<const Point3> anchors, const Point3& node,
                                const geometry::Window& window, geometry::EdgeKind kind,
                                const Tolerances& tol) {
  const Eigen::MatrixXd j = jacobian(anchors, node, window, kind, tol);
  Identifiability out;
  out.rank = numerical_rank(j, tol.rank_ratio);
  out.identifiable = out.rank == 3;
  return out;
}

}  // namespace diffpos::fisher
