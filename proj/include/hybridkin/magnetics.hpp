#pragma once

#include <variant>
#include <vector>

#include "hybridkin/geom.hpp"

namespace hybridkin::mag {

/// Vacuum permeability [T*m/A].
inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;

/// Point dipole: position [m] and moment vector [A*m^2].
struct Dipole {
  Vec3 position{Vec3::Zero()};
  Vec3 moment{Vec3::Zero()};
};

/// Physical parameters of one chain ball.
struct BallParams {
  double diameter = 3.175e-3;        // d_c [m]
  double mass = 0.13e-3;             // [kg]
  double dipole_magnitude = 0.0;     // mu [A*m^2]
  double remanence = 0.0;            // B_r [T], source value when given

  /// mu = B_r * (pi d^3 / 6) / mu0 for a uniformly magnetized sphere.
  static double moment_from_remanence(double remanence, double diameter);
  static BallParams from_remanence(double remanence, double diameter, double mass);
};

/// Field source: a point-dipole magnet or an ideal uniform field.
struct UniformField {
  Vec3 field{Vec3::Zero()};  // B [T]
};
using FieldSource = std::variant<Dipole, UniformField>;

/// B at an offset `position` from the source (dipole variant evaluates the
/// dipole model at r = position - dipole.position).
Vec3 source_field(const FieldSource& src, const Vec3& position);
/// dB/dr of the source at `position` (zero matrix for the uniform variant).
Mat3 source_field_gradient(const FieldSource& src, const Vec3& position);

/// Dipole model B(r, mu) = mu0/(4 pi |r|^3) (3 r^ r^T - I) mu.
/// Throws std::domain_error when |r| < 1e-12 m.
Vec3 dipole_field(const Vec3& r, const Vec3& moment);

/// Analytic spatial gradient dB/dr of the dipole field. Symmetric and
/// trace-free away from the origin. Throws std::domain_error near r = 0.
Mat3 dipole_field_gradient(const Vec3& r, const Vec3& moment);

/// Force on a dipole mu in a field with spatial gradient grad_B:
/// f = grad(mu . B) = grad_B^T mu (moment held fixed).
Vec3 magnetic_force(const Vec3& moment, const Mat3& grad_B);

/// Torque on a dipole: tau = mu x B.
Vec3 magnetic_torque(const Vec3& moment, const Vec3& field);

/// Ball chain configuration: per-ball centers [m] and dipole vectors [A*m^2].
/// Positions of consecutive balls are in contact (|p_i - p_{i-1}| = d_c) and
/// dipole magnitudes are constant; see chain::check_invariants.
struct ChainConfig {
  std::vector<Vec3> positions;
  std::vector<Vec3> dipoles;

  int size() const { return static_cast<int>(positions.size()); }

  /// Bend angles theta_i between consecutive link directions, one entry per
  /// interior ball (size n-2 for n >= 3).
  std::vector<double> bend_angles() const;
};

struct EnergyBreakdown {
  double U_e = 0.0;      // external-source term [J]
  double U_b = 0.0;      // inter-ball dipole term [J]
  double U_g = 0.0;      // gravitational term [J]
  double U_s = 0.0;      // sleeve elastic term [J]
  double U_total = 0.0;  // sum of the four terms
};

/// Total potential energy of a ball chain.
///   U_e = -sum mu_i . B_src(p_i)
///   U_b = -sum_{i<j} mu_i . B(p_i - p_j, mu_j)
///   U_g = -sum m_i g . p_i           (g the gravity acceleration vector)
///   U_s = 1/2 sum sleeve_EI theta_i^2 / d_c over interior extended balls,
///         theta_i the bend angle between consecutive link directions.
/// `extended` is the number of distal balls outside the tube (used only for
/// the sleeve term's index range). Throws std::domain_error when two ball
/// centers coincide.
EnergyBreakdown chain_energy(const ChainConfig& chain, const FieldSource& src,
                             const BallParams& ball, const Vec3& gravity,
                             double sleeve_EI = 0.0, int extended = 0);

}  // namespace hybridkin::mag
