#pragma once

namespace diffpos {

/// Speed of light, m/s (exact).
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Default carrier for field computations (28 GHz mmWave).
inline constexpr double kDefaultFrequencyHz = 28.0e9;

inline constexpr double kPi = 3.14159265358979323846;

/// Numerical thresholds used across the library. Every public operation that
/// makes a numerical decision takes one of these so tests can tighten them.
struct Tolerances {
  /// Max |s'.e - s.e| accepted for a diffraction-point solution.
  double law_residual = 1e-9;
  /// Max | |v| - 1 | for vectors declared unit.
  double unit_norm = 1e-12;
  /// Roots of the diffraction-point quadratic within this distance of [0,1]
  /// are clamped onto the edge.
  double lambda_clamp = 1e-9;
  /// Negative discriminants smaller than this (relative to max(b^2, |4ac|))
  /// are treated as round-off and clamped to zero.
  double discriminant = 1e-12;
  /// |a| below this fraction of max(|b|,|c|) selects the linear root.
  double degenerate_quadratic = 1e-12;
  /// |e x s| below this means the ray runs along the edge.
  double grazing = 1e-12;
  /// sin(gamma0) below this makes the Keller prefactor blow up.
  double grazing_sin = 1e-9;
  /// |cos((psi -+ psi')/2)| below this is a shadow boundary.
  double shadow_boundary = 1e-6;
  /// Singular values below rank_ratio * sigma_max count as zero.
  double rank_ratio = 1e-9;
  /// FIM condition numbers above this are flagged ill-conditioned.
  double ill_conditioned = 1e12;
};

}  // namespace diffpos
