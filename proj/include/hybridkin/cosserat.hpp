#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "hybridkin/geom.hpp"

namespace hybridkin::rod {

// Conventions
// -----------
// Body-frame Cosserat rod with arc length s in [0, l_t]:
//   p'(s) = R v,  R'(s) = R skew(u)
//   n' = -u x n - f_b,  m' = -u x m - v x n - tau_b
// where (n, m) are the internal force/moment in the body frame with the
// distal-side convention: R(s) n(s) is the force the material on [s, l_t]
// exerts through the cross-section, so n(l_t) equals the applied tip load
// and the base reaction is -R(0) n(0). (f_b, tau_b) are applied distributed
// loads per unit length rotated into the body frame.
//
// Constitutive law: n = Kse (v - v0), m = Kbt (u - u0),
// Kse = diag(GA, GA, EA), Kbt = diag(EIxx, EIyy, GJzz).
//
// The tendon runs on the surface along body e1 at radius d_t/2:
//   p_t = p_c + (d_t/2) R e1
//   f_t = -lambda (p_t'x)^2 p_t'' / |p_t'|^3,  tau_t = (p_t - p_c) x f_t
// and loads the tip with F(l_t) = -lambda p_c'/|p_c'|,
// T(l_t) = (p_t - p_c) x F(l_t). f_t depends on (u', v'); the integrator
// closes the resulting linear relation exactly at every RHS evaluation.

struct TubeParams {
  double length = 0.1016;          // l_t [m]
  double diameter = 4.7e-3;        // d_t, outer [m]; tendon moment arm d_t/2
  double elastic_modulus = 4.10e9; // E [Pa]
  double shear_modulus = 34.13e6;  // G [Pa]
  double area = 0.0;               // A [m^2]
  double I_xx = 0.0, I_yy = 0.0;   // second moments [m^4]
  double J_zz = 0.0;               // polar moment [m^4]
  Vec3 u0{Vec3::Zero()};           // reference angular strain [1/m]
  Vec3 v0{Vec3::UnitZ()};          // reference linear strain [-]
  double mass_density = 0.0;       // linear density [kg/m]
  geom::Pose base;

  Mat3 Kse() const;  // diag(GA, GA, EA)
  Mat3 Kbt() const;  // diag(EIxx, EIyy, GJzz)
  void validate() const;  // throws std::invalid_argument on bad values

  /// Annular cross-section A, I, J from outer/inner diameters.
  static TubeParams annulus(double outer_d, double inner_d);
};

struct RodState {
  double s = 0.0;
  Vec3 p{Vec3::Zero()};
  Mat3 R{Mat3::Identity()};
  Vec3 n{Vec3::Zero()};  // internal force, body frame [N]
  Vec3 m{Vec3::Zero()};  // internal moment, body frame [N*m]
};

struct RodShape {
  std::vector<RodState> samples;  // s strictly increasing, [0, l_t]
  double tension = 0.0;           // lambda [N]
  Vec3 base_internal_force{Vec3::Zero()};   // n(0^-), body frame
  Vec3 base_internal_moment{Vec3::Zero()};  // m(0^-), body frame

  const RodState& tip() const { return samples.back(); }
  Vec3 tip_tangent() const;           // R(l_t) e3
  Vec3 tangent_at(double s) const;    // interpolated unit tangent
  Vec3 position_at(double s) const;   // interpolated centerline point
  double length() const { return samples.back().s; }
};

/// Point force applied to the rod, world frame; realized as an internal-force
/// discontinuity at the nearest integration node >= s.
struct PointLoad {
  double s = 0.0;
  Vec3 force{Vec3::Zero()};
};

/// (n; m) = (Kse (v - v0); Kbt (u - u0)).
std::pair<Vec3, Vec3> constitutive(const Vec3& u, const Vec3& v, const TubeParams& params);
/// Inverse constitutive map: (u, v) from body-frame (n, m).
std::pair<Vec3, Vec3> strains_from_loads(const Vec3& n, const Vec3& m, const TubeParams& params);

/// Tendon surface point p_t = p_c + (d_t/2) R e1.
Vec3 tendon_path(const RodState& state, const TubeParams& params);

struct DistributedLoad {
  Vec3 force{Vec3::Zero()};   // [N/m], world frame
  Vec3 torque{Vec3::Zero()};  // [N*m/m], world frame, about the centerline
};

/// Tendon distributed load from the local state and strain derivatives.
/// Throws std::domain_error when |p_t'| < 1e-9 (degenerate tangent).
DistributedLoad tendon_distributed_load(const RodState& state, const Vec3& u, const Vec3& v,
                                        const Vec3& udot, const Vec3& vdot, double tension,
                                        const TubeParams& params);

struct StateDerivative {
  Vec3 pdot;  // world frame
  Vec3 u;     // body angular rate, R' = R skew(u)
  Vec3 ndot;  // body frame
  Vec3 mdot;  // body frame
};

/// Rod ODE right-hand side under given applied distributed loads
/// (world frame); (u, v) recovered from (n, m).
StateDerivative ode_rhs(const RodState& state, const DistributedLoad& applied,
                        const TubeParams& params);

/// Fixed-step integration from s = 0 to l_t under the tendon load (closed
/// implicitly), distributed gravity mass_density * gravity, and point-load
/// jumps. steps >= 16. Orientation is advanced multiplicatively (RKMK4).
RodShape integrate_rod(const RodState& initial, double tension, const Vec3& gravity,
                       const std::vector<PointLoad>& point_loads, const TubeParams& params,
                       int steps = 200);

struct ShootingSettings {
  double tolerance = 1e-8;   // on |residual| / (1 + lambda)
  int max_iterations = 100;
  double fd_step = 1e-6;     // forward-difference step on (n0, m0)
  int steps = 200;           // integration steps
  std::optional<Vec6> initial_guess;  // warm start (n0; m0), body frame
};

struct ShootingFailure : std::runtime_error {
  ShootingFailure(const std::string& what, double residual, RodShape best)
      : std::runtime_error(what), residual(residual), best(std::move(best)) {}
  double residual;
  RodShape best;
};

struct ShootingResult {
  RodShape shape;
  double residual = 0.0;  // scaled residual at the solution
  int iterations = 0;
};

/// Solves the two-point BVP for the tendon-loaded rod by shooting on the
/// base internal loads (n0, m0). Tip condition:
///   n_w(l_t) = -lambda t(l_t) + tip_force,  m_w(l_t) = (p_t - p_c) x (-lambda t)
/// with t the unit centerline tangent. tip_force carries any extra applied
/// tip load (e.g. from the extended ball chain). Point loads landing on the
/// final node are folded into the tip condition.
ShootingResult solve_bvp_shooting(const TubeParams& params, double tension, const Vec3& gravity,
                                  const std::vector<PointLoad>& point_loads = {},
                                  const Vec3& tip_force = Vec3::Zero(),
                                  const ShootingSettings& settings = {});

/// Test hook: same shooting machinery with the tip condition replaced by a
/// pure applied tip moment, n_w(l_t) = 0, m_w(l_t) = tip_moment (world).
ShootingResult solve_bvp_tip_moment(const TubeParams& params, const Vec3& tip_moment,
                                    const ShootingSettings& settings = {});

}  // namespace hybridkin::rod
