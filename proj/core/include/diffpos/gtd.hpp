#pragma once

#include <complex>

#include "diffpos/config.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/vec3.hpp"

/// Keller (GTD) edge-diffraction fields for a perfectly conducting half-plane.
/// Phase convention is exp(-jk r).
namespace diffpos::gtd {

using Complex = std::complex<double>;

struct ComplexVec3 {
  Complex x;
  Complex y;
  Complex z;
};

Complex dot(const ComplexVec3& field, const Vec3& direction);
double squared_magnitude(const ComplexVec3& field);

/// Ray-fixed (incident) and edge-fixed (diffracted) polarisation frames.
/// (phi_p, beta0_p, s_p) and (phi, beta0, s) are orthonormal triples.
struct RayFrame {
  Vec3 phi_p;
  Vec3 beta0_p;
  Vec3 phi;
  Vec3 beta0;
  Vec3 s_p;
  Vec3 s;
};

struct PsiAngles {
  double psi_p = 0.0;
  double psi = 0.0;
};

struct DiffractionCoefficients {
  Complex d_s;  ///< soft, m^(1/2)
  Complex d_h;  ///< hard, m^(1/2)
  double psi = 0.0;
  double psi_p = 0.0;
  double gamma0 = 0.0;
};

/// Small-window, far-node coefficients expressed through the anchor
/// elevation angle theta.
struct ApproxCoefficients {
  Complex ds_lower;
  Complex ds_upper;
  Complex dh_lower;
  Complex dh_upper;
};

struct DiffractedField {
  ComplexVec3 e;            ///< total field, V/m
  Complex beta0_component;  ///< E along beta0
  Complex phi_component;    ///< E along phi
};

double wavenumber(double frequency_hz);

/// Throws GrazingRay when either ray runs along the edge, InvalidVector for
/// non-unit input.
RayFrame ray_frames(const Vec3& s_p, const Vec3& s, const Vec3& e, const Tolerances& tol = {});

/// Incidence and diffraction angles measured from the lit face of the
/// half-plane, psi in [0, 2 pi].
PsiAngles psi_angles(const RayFrame& frame, const geometry::DiffractingEdge& edge,
                     const Tolerances& tol = {});

/// -exp(-j pi/4) / (2 sqrt(2 pi k) sin gamma0); common factor of D_s and D_h.
Complex keller_prefactor(double gamma0, double wavenumber, const Tolerances& tol = {});

/// Throws ShadowBoundary when either cosine in the denominators is within
/// tol.shadow_boundary of zero (Keller coefficients diverge there; a uniform
/// theory would be needed), GrazingRay for sin(gamma0) ~ 0.
DiffractionCoefficients keller_coefficients(double psi_p, double psi, double gamma0,
                                            double wavenumber, const Tolerances& tol = {});

ApproxCoefficients approx_coefficients(double theta, Complex prefactor,
                                       const Tolerances& tol = {});

/// Field diffracted toward the observer for a linearly polarised source
/// field e0, incident path |s'| = s_p_len and diffracted path |s| = s_len.
DiffractedField diffracted_field(const ComplexVec3& e0, const RayFrame& frame,
                                 const DiffractionCoefficients& coeffs, double s_p_len,
                                 double s_len, double wavenumber);

/// Upper-to-lower window MPC power ratio under x-polarisation,
/// (1 + cos theta) / (1 - cos theta). Throws Divergent at theta = 0.
double power_ratio(double theta);

/// Anchor elevation angle seen from the lower window edge, measured from the
/// wall (0 = anchor far below, pi/2 = level with the edge).
double elevation_angle(const Point3& anchor, const Point3& node, const geometry::Window& window);

/// Full geometry-to-field chain for one window edge.
struct EdgeField {
  geometry::DiffractionSolution path;
  RayFrame frame;
  DiffractionCoefficients coeffs;
  DiffractedField field;
};

EdgeField building_edge_field(const Point3& anchor, const Point3& node,
                              const geometry::Window& window, geometry::EdgeKind kind,
                              const ComplexVec3& e0, double wavenumber,
                              const Tolerances& tol = {});

/// |E_upper|^2 / |E_lower|^2 from full GTD fields (no small-window
/// approximation).
double exact_power_ratio(const Point3& anchor, const Point3& node,
                         const geometry::Window& window, const ComplexVec3& e0,
                         double wavenumber, const Tolerances& tol = {});

inline constexpr ComplexVec3 kXPolarized{Complex{1.0, 0.0}, Complex{0.0, 0.0}, Complex{0.0, 0.0}};

}  // namespace diffpos::gtd
