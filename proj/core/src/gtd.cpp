#include "diffpos/gtd.hpp"

#include <algorithm>
#include <cmath>

#include "diffpos/errors.hpp"

namespace diffpos::gtd {

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

double signum(double v) { return static_cast<double>((0.0 < v) - (v < 0.0)); }

void require_unit(const Vec3& v, const Tolerances& tol, const char* what) {
  if (!is_unit(v, tol.unit_norm)) {
    throw Error(ErrorCode::kInvalidVector, std::string(what) + " must be a unit vector");
  }
}

// Component of a unit ray perpendicular to the edge, renormalised.
Vec3 transverse(const Vec3& ray, const Vec3& e, const Tolerances& tol) {
  const Vec3 t = ray - dot(ray, e) * e;
  const double n = norm(t);
  if (n <= tol.grazing) {
    throw Error(ErrorCode::kGrazingRay, "ray is parallel to the edge");
  }
  return t / n;
}

}  // namespace

Complex dot(const ComplexVec3& field, const Vec3& direction) {
  return field.x * direction.x + field.y * direction.y + field.z * direction.z;
}

double squared_magnitude(const ComplexVec3& field) {
  return std::norm(field.x) + std::norm(field.y) + std::norm(field.z);
}

double wavenumber(double frequency_hz) {
  if (!(frequency_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "frequency must be positive");
  }
  return 2.0 * kPi * frequency_hz / kSpeedOfLight;
}

RayFrame ray_frames(const Vec3& s_p, const Vec3& s, const Vec3& e, const Tolerances& tol) {
  require_unit(s_p, tol, "incident ray");
  require_unit(s, tol, "diffracted ray");
  require_unit(e, tol, "edge vector");

  const Vec3 e_cross_sp = cross(e, s_p);
  const Vec3 e_cross_s = cross(e, s);
  const double n_sp = norm(e_cross_sp);
  const double n_s = norm(e_cross_s);
  if (n_sp <= tol.grazing || n_s <= tol.grazing) {
    throw Error(ErrorCode::kGrazingRay, "ray is parallel to the edge");
  }

  RayFrame frame;
  frame.s_p = s_p;
  frame.s = s;
  frame.phi_p = -e_cross_sp / n_sp;
  frame.beta0_p = cross(frame.phi_p, s_p);
  frame.phi = e_cross_s / n_s;
  frame.beta0 = cross(frame.phi, s);
  return frame;
}

PsiAngles psi_angles(const RayFrame& frame, const geometry::DiffractingEdge& edge,
                     const Tolerances& tol) {
  const geometry::EdgeFrame& ef = edge.frame;
  const Vec3 st_p = transverse(frame.s_p, ef.e, tol);
  const Vec3 st = transverse(frame.s, ef.e, tol);

  PsiAngles angles;
  angles.psi_p = kPi - (kPi - std::acos(clamp_unit(-dot(st_p, ef.t0)))) * signum(-dot(st_p, ef.n0));
  angles.psi = kPi - (kPi - std::acos(clamp_unit(dot(st, ef.t0)))) * signum(dot(st, ef.n0));
  return angles;
}

Complex keller_prefactor(double gamma0, double wavenumber, const Tolerances& tol) {
  if (!(wavenumber > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "wavenumber must be positive");
  }
  const double sin_gamma = std::sin(gamma0);
  if (std::abs(sin_gamma) < tol.grazing_sin) {
    throw Error(ErrorCode::kGrazingRay, "sin(gamma0) vanishes");
  }
  const Complex phase = std::polar(1.0, -kPi / 4.0);
  return -phase / (2.0 * std::sqrt(2.0 * kPi * wavenumber) * sin_gamma);
}

DiffractionCoefficients keller_coefficients(double psi_p, double psi, double gamma0,
                                            double wavenumber, const Tolerances& tol) {
  const double cos_diff = std::cos(0.5 * (psi - psi_p));
  const double cos_sum = std::cos(0.5 * (psi + psi_p));
  if (std::abs(cos_diff) < tol.shadow_boundary) {
    throw Error(ErrorCode::kShadowBoundary, "incident shadow boundary (cos((psi - psi')/2) ~ 0)");
  }
  if (std::abs(cos_sum) < tol.shadow_boundary) {
    throw Error(ErrorCode::kShadowBoundary, "reflection shadow boundary (cos((psi + psi')/2) ~ 0)");
  }
  const Complex prefactor = keller_prefactor(gamma0, wavenumber, tol);

  DiffractionCoefficients out;
  out.d_s = prefactor * (1.0 / cos_diff - 1.0 / cos_sum);
  out.d_h = prefactor * (1.0 / cos_diff + 1.0 / cos_sum);
  out.psi = psi;
  out.psi_p = psi_p;
  out.gamma0 = gamma0;
  return out;
}

ApproxCoefficients approx_coefficients(double theta, Complex prefactor, const Tolerances& tol) {
  if (!(theta > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "elevation angle must be positive");
  }
  const double c = std::cos(theta);
  if (theta >= 0.5 * kPi || c < tol.shadow_boundary) {
    throw Error(ErrorCode::kShadowBoundary, "approximate coefficients diverge as theta -> pi/2");
  }
  const double weak = -2.0 * std::sqrt(1.0 - c) / c;
  const double strong = 2.0 * std::sqrt(1.0 + c) / c;
  // Hard terms are the psi -> 3 pi / 2 limit of the Keller formula: same
  // magnitudes as the soft pair, swapped between edges, opposite sign.
  return {prefactor * weak, prefactor * strong, -prefactor * strong, -prefactor * weak};
}

DiffractedField diffracted_field(const ComplexVec3& e0, const RayFrame& frame,
                                 const DiffractionCoefficients& coeffs, double s_p_len,
                                 double s_len, double wavenumber) {
  if (!(s_p_len > 0.0) || !(s_len > 0.0)) {
    throw Error(ErrorCode::kInvalidGeometry, "ray segments must have positive length");
  }
  const Complex incident_spread = std::polar(1.0, -wavenumber * s_p_len) / s_p_len;
  const Complex diffracted_spread = std::polar(1.0, -wavenumber * s_len) / std::sqrt(s_len);

  const Complex e_beta_i = dot(e0, frame.beta0_p) * incident_spread;
  const Complex e_phi_i = dot(e0, frame.phi_p) * incident_spread;

  DiffractedField out;
  out.beta0_component = -coeffs.d_s * e_beta_i * diffracted_spread;
  out.phi_component = -coeffs.d_h * e_phi_i * diffracted_spread;
  out.e = {out.beta0_component * frame.beta0.x + out.phi_component * frame.phi.x,
           out.beta0_component * frame.beta0.y + out.phi_component * frame.phi.y,
           out.beta0_component * frame.beta0.z + out.phi_component * frame.phi.z};
  return out;
}

double power_ratio(double theta) {
  if (!(theta >= 0.0) || theta > 0.5 * kPi) {
    throw Error(ErrorCode::kInvalidGeometry, "theta must lie in (0, pi/2]");
  }
  const double c = std::cos(theta);
  if (1.0 - c <= 0.0) {
    throw Error(ErrorCode::kDivergent, "power ratio diverges at theta = 0");
  }
  // cos(pi/2) is 6e-17 in floating point; report the exact boundary value.
  if (theta == 0.5 * kPi) return 1.0;
  return (1.0 + c) / (1.0 - c);
}

double elevation_angle(const Point3& anchor, const Point3& node, const geometry::Window& window) {
  const double rise = geometry::window_edge_height(node, window, geometry::EdgeKind::kLower) - anchor.z;
  return std::acos(clamp_unit(rise / std::hypot(anchor.y, rise)));
}

EdgeField building_edge_field(const Point3& anchor, const Point3& node,
                              const geometry::Window& window, geometry::EdgeKind kind,
                              const ComplexVec3& e0, double wavenumber, const Tolerances& tol) {
  EdgeField out;
  out.path = geometry::building_path_length(anchor, node, window, kind, tol);
  const geometry::DiffractingEdge edge = geometry::build_edge_frame(
      kind, window.x1, window.x2, geometry::window_edge_height(node, window, kind));

  const Vec3 s_p = normalized(out.path.q - anchor);
  const Vec3 s = normalized(node - out.path.q);
  out.frame = ray_frames(s_p, s, edge.frame.e, tol);
  const PsiAngles angles = psi_angles(out.frame, edge, tol);
  out.coeffs = keller_coefficients(angles.psi_p, angles.psi, out.path.gamma0, wavenumber, tol);
  out.field = diffracted_field(e0, out.frame, out.coeffs, out.path.opl, out.path.ipl, wavenumber);
  return out;
}

double exact_power_ratio(const Point3& anchor, const Point3& node,
                         const geometry::Window& window, const ComplexVec3& e0,
                         double wavenumber, const Tolerances& tol) {
  const EdgeField upper =
      building_edge_field(anchor, node, window, geometry::EdgeKind::kUpper, e0, wavenumber, tol);
  const EdgeField lower =
      building_edge_field(anchor, node, window, geometry::EdgeKind::kLower, e0, wavenumber, tol);
  const double p_lower = squared_magnitude(lower.field.e);
  if (p_lower == 0.0) {
    throw Error(ErrorCode::kDivergent, "lower-edge field vanishes");
  }
  return squared_magnitude(upper.field.e) / p_lower;
}

}  // namespace diffpos::gtd
