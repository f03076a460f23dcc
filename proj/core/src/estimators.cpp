#include "diffpos/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "diffpos/errors.hpp"

namespace diffpos::estimators {

namespace {

constexpr double kMaxDamping = 1e12;
// A step that only shrinks because the damping exploded is a stall.
constexpr double kStalledDamping = 1e6;

struct Evaluation {
  Eigen::VectorXd residual;  // (r_j - p_j) / sigma_j
  Eigen::MatrixXd jac;       // d residual / d alpha
  double cost = 0.0;

  Eigen::Vector3d gradient() const { return jac.transpose() * residual; }
};

class NlsProblem {
 public:
  NlsProblem(const RangeMeasurementSet& meas, const geometry::Window& window,
             const NlsOptions& options)
      : meas_(meas), window_(window), options_(options) {}

  Point3 project(const Point3& p) const {
    Point3 out = options_.search_box ? options_.search_box->clamp(p) : p;
    out.y = std::max(out.y, options_.min_depth);
    return out;
  }

  std::optional<Evaluation> evaluate(const Point3& alpha) const {
    const auto m = static_cast<Eigen::Index>(meas_.anchors.size());
    Evaluation ev;
    ev.residual.resize(m);
    ev.jac.resize(m, 3);
    try {
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto idx = static_cast<std::size_t>(j);
        const Point3& a = meas_.anchors[idx];
        const double p = geometry::building_path_length(a, alpha, window_, options_.kind,
                                                        options_.tol).path_length;
        const Vec3 g = fisher::path_gradient(a, alpha, window_, options_.kind, options_.tol);
        const double s = meas_.sigma[idx];
        ev.residual(j) = (meas_.ranges[idx] - p) / s;
        ev.jac.row(j) = -to_eigen(g).transpose() / s;
      }
    } catch (const Error& e) {
      if (!is_geometry_error(e.code())) throw;
      last_error_ = e.code();
      return std::nullopt;
    }
    ev.cost = 0.5 * ev.residual.squaredNorm();
    return ev;
  }

  PositionEstimate solve(const Point3& init) const {
    PositionEstimate out;
    Point3 alpha = project(init);
    std::optional<Evaluation> current = evaluate(alpha);
    if (!current) {
      throw Error(last_error_, "no valid diffraction path at the initial point");
    }

    double mu = options_.initial_damping;
    for (int it = 0; it < options_.max_iterations; ++it) {
      out.iterations = it + 1;
      const Eigen::Vector3d g = current->gradient();
      if (g.norm() < options_.gradient_tolerance) {
        out.converged = true;
        break;
      }
      const Eigen::Matrix3d h = current->jac.transpose() * current->jac;
      Eigen::Vector3d scale = h.diagonal();
      const double floor = 1e-12 * std::max(scale.maxCoeff(), 1e-300);
      scale = scale.cwiseMax(floor);
      const Eigen::Matrix3d damped = h + mu * Eigen::Matrix3d(scale.asDiagonal());
      const Eigen::Vector3d delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) break;

      const Point3 candidate = project(alpha + Vec3{delta.x(), delta.y(), delta.z()});
      const double step = distance(candidate, alpha);
      if (step < options_.step_tolerance) {
        out.converged = mu <= kStalledDamping;
        break;
      }
      std::optional<Evaluation> next = evaluate(candidate);
      if (next && next->cost < current->cost) {
        alpha = candidate;
        current = std::move(next);
        mu = std::max(mu / options_.damping_factor, 1e-15);
      } else {
        mu *= options_.damping_factor;
        if (mu > kMaxDamping) break;
      }
    }

    out.alpha_hat = alpha;
    out.gradient_norm = current->gradient().norm();
    double rss = 0.0;
    for (Eigen::Index j = 0; j < current->residual.size(); ++j) {
      rss += std::pow(current->residual(j) * meas_.sigma[static_cast<std::size_t>(j)], 2);
    }
    out.residual_norm = std::sqrt(rss);
    cost_ = current->cost;
    return out;
  }

  double last_cost() const { return cost_; }

 private:
  const RangeMeasurementSet& meas_;
  const geometry::Window& window_;
  const NlsOptions& options_;
  mutable ErrorCode last_error_ = ErrorCode::kInvalidGeometry;
  mutable double cost_ = 0.0;
};

void validate(const RangeMeasurementSet& meas) {
  if (meas.ranges.size() != meas.anchors.size() || meas.sigma.size() != meas.anchors.size()) {
    throw Error(ErrorCode::kInvalidGeometry, "measurement set sizes disagree");
  }
  for (std::size_t j = 0; j < meas.anchors.size(); ++j) {
    if (!std::isfinite(meas.ranges[j])) {
      throw Error(ErrorCode::kInvalidGeometry, "range " + std::to_string(j) + " is not finite");
    }
  }
}

}  // namespace

bool Box::contains(const Point3& p) const {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

Point3 Box::center() const {
  return {0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y), 0.5 * (lo.z + hi.z)};
}

Point3 Box::clamp(const Point3& p) const {
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RangeMeasurementSet synthesize_ranges(const Point3& truth, std::span<const Point3> anchors,
                                      const geometry::Window& window,
                                      const fisher::RangingModel& model, std::uint64_t seed,
                                      const SynthesisOptions& options) {
  if (model.snr_linear.size() != anchors.size()) {
    throw Error(ErrorCode::kInvalidGeometry, "ranging model and anchor list differ in size");
  }
  RangeMeasurementSet meas;
  meas.anchors.assign(anchors.begin(), anchors.end());
  meas.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    const double sigma = fisher::range_sigma(model, j);
    const double p = options.euclidean
                         ? distance(anchors[j], truth)
                         : geometry::building_path_length(anchors[j], truth, window, options.kind)
                               .path_length;
    // Draw unconditionally so the stream does not depend on noise_scale.
    const double n = gauss(rng);
    meas.ranges.push_back(p + options.noise_scale * sigma * n);
    meas.sigma.push_back(sigma);
  }
  return meas;
}

PositionEstimate estimate_diffraction_nls(const RangeMeasurementSet& meas,
                                          const geometry::Window& window, const Point3& init,
                                          const NlsOptions& options) {
  validate(meas);
  if (meas.anchors.size() < 3) {
    throw Error(ErrorCode::kNotIdentifiable, "at least three anchors are required");
  }
  const NlsProblem problem(meas, window, options);
  PositionEstimate best = problem.solve(init);
  double best_cost = problem.last_cost();
  if (best.converged || options.restarts <= 0) return best;

  std::mt19937_64 rng(derive_seed(meas.seed, 0x6a09e667f3bcc908ULL));
  Vec3 spread{2.0, 2.0, 2.0};
  if (options.search_box) {
    spread = (options.search_box->hi - options.search_box->lo) * 0.25;
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int r = 1; r <= options.restarts; ++r) {
    const Point3 start = init + Vec3{spread.x * unit(rng), spread.y * unit(rng), spread.z * unit(rng)};
    PositionEstimate trial;
    try {
      trial = problem.solve(start);
    } catch (const Error& e) {
      if (!is_geometry_error(e.code())) throw;
      continue;
    }
    const double cost = problem.last_cost();
    const bool better = (trial.converged && !best.converged) ||
                        (trial.converged == best.converged && cost < best_cost);
    if (better) {
      best = trial;
      best_cost = cost;
    }
    best.restarts = r;
    if (best.converged) break;
  }
  return best;
}

PositionEstimate estimate_lls_baseline(const RangeMeasurementSet& meas, LlsVariant variant) {
  validate(meas);
  const std::size_t m = meas.anchors.size();
  if (m < 3) {
    throw Error(ErrorCode::kDegenerateGeometry, "trilateration needs at least three anchors");
  }
  const Eigen::Vector3d a0 = to_eigen(meas.anchors[0]);
  const double r0 = meas.ranges[0];
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m - 1), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m - 1));
  for (std::size_t j = 1; j < m; ++j) {
    const Eigen::Vector3d aj = to_eigen(meas.anchors[j]);
    const auto row = static_cast<Eigen::Index>(j - 1);
    a.row(row) = 2.0 * (aj - a0).transpose();
    b(row) = r0 * r0 - meas.ranges[j] * meas.ranges[j] + aj.squaredNorm() - a0.squaredNorm();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  constexpr double kRankRatio = 1e-9;
  svd.setThreshold(kRankRatio);
  const int rank = static_cast<int>(svd.rank());
  if (rank < 2) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "differenced trilateration system has rank " + std::to_string(rank));
  }

  Eigen::Vector3d x = svd.solve(b);
  if (rank == 2 && variant == LlsVariant::kReferenceDifferencing) {
    // x + t n, |x + t n - a0|^2 = r0^2
    const Eigen::Vector3d n = svd.matrixV().col(2);
    const Eigen::Vector3d off = x - a0;
    const double half_b = n.dot(off);
    const double c = off.squaredNorm() - r0 * r0;
    const double disc = half_b * half_b - c;
    if (disc >= 0.0) {
      const Eigen::Vector3d p1 = x + (-half_b + std::sqrt(disc)) * n;
      const Eigen::Vector3d p2 = x + (-half_b - std::sqrt(disc)) * n;
      x = p1.y() >= p2.y() ? p1 : p2;
    } else {
      x += -half_b * n;
    }
  }

  PositionEstimate out;
  out.alpha_hat = point_from_eigen(x);
  out.converged = true;
  double rss = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    rss += std::pow(meas.ranges[j] - distance(meas.anchors[j], out.alpha_hat), 2);
  }
  out.residual_norm = std::sqrt(rss);
  return out;
}

}  // namespace diffpos::estimators
