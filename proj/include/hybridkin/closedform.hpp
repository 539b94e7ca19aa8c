#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "hybridkin/geom.hpp"

namespace hybridkin::cc {

struct CCParams {
  double l_t = 0.1016;    // tube length [m]
  double EI = 0.0;        // bending stiffness [N*m^2]
  double d_t = 4.7e-3;    // tube diameter (tendon moment arm d_t/2) [m]
  geom::Pose base;
  double r_d = 0.0;       // max radial tip deflection [m]; 2 l_t / pi default
  int n = 10;             // ball count
  double d_c = 3.175e-3;  // ball diameter [m]

  double radial_limit() const;  // r_d if set, else 2 l_t / pi
  void validate() const;
};

struct IKSolution {
  double tension = 0.0;       // F [N], reported nonnegative
  double phi = 0.0;           // base roll [rad]
  Vec3 b_hat{Vec3::UnitZ()};  // field direction = v_g
  double k = 0.0;             // tube bend angle [rad]
  double rho = 0.0;           // radius of curvature [m]; infinite when k = 0
  int n_e = 0;                // ceil(s* / d_c)
  Vec3 p_i{Vec3::Zero()};     // chain/tube intersection point (base frame)
  double s_star = 0.0;        // straight chain extension [m]
  double arc_length = 0.0;    // rho * k, inserted tube length [m]
  double alpha_g = 0.0, beta_g = 0.0;  // approach angles of v_g (diagnostics)
  bool within_angle_range = true;
};

struct InfeasibleTarget : std::runtime_error {
  explicit InfeasibleTarget(const std::string& reason)
      : std::runtime_error(reason), reason(reason) {}
  std::string reason;
};

struct IKOptions {
  std::optional<double> fixed_k;  // treat the bend angle as a caller-fixed constant
};

/// Constant-curvature tube tip pose for roll phi and curvature kappa:
/// p = base + R_b rot_z(phi) w, w = rho (1 - cos k, 0, sin k), k = l_t kappa,
/// R = R_b rot_z(phi) rot_y(k). kappa = 0 is the straight limit.
geom::Pose forward_tube_cc(const CCParams& params, double phi, double kappa);

struct ChainLine {
  Vec3 tip;
  Vec3 tangent;
};

/// Straight-chain model: tip = base + extension * b_hat (global frame).
ChainLine forward_chain_line(const geom::Pose& base, const Vec3& b_hat, double extension);

/// Hybrid forward kinematics: constant-curvature tube composed with the
/// straight chain. `extension` in meters (n_e * d_c for whole balls).
ChainLine forward_hybrid_cc(const CCParams& params, double phi, double kappa, const Vec3& b_hat,
                            double extension);

/// Closed-form inverse kinematics for target position p_g approached along
/// unit v_g (base frame). B = v_g; the tube/chain junction p_i is found on
/// the backward ray p_g - v_g s as the smallest s inside the radial
/// cylinder r <= r_d, within chain reach s <= n d_c, whose implied
/// constant-curvature arc length fits the tube (rho k <= l_t); (k, rho)
/// solve rho (1 - cos k) = r_i, rho sin k = z_i; F = 2 EI (1 - cos k) /
/// (d_t r_i). Throws InfeasibleTarget (reasons: "radial reach exceeded",
/// "no real intersection", "s* interval empty").
IKSolution inverse_kinematics(const Vec3& p_g, const Vec3& v_g, const CCParams& params,
                              const IKOptions& options = {});

/// F = 2 EI (1 - cos k) / (d_t r_i), the tendon tension holding a
/// constant-curvature bend whose tip sits at radial distance r_i.
double tendon_force_for_bend(double EI, double d_t, double r_i, double k);

/// Side-plane approach-angle range alpha_M(r) [rad].
double alpha_max(double r, const CCParams& params);
/// Front-plane approach-angle range beta_M(r) [rad].
double beta_max(double r, const CCParams& params);

struct WorkspaceEntry {
  double r;
  double alpha;
  double beta;
};

std::vector<WorkspaceEntry> workspace_sweep(const CCParams& params, double r_min, double r_max,
                                            int samples);

}  // namespace hybridkin::cc
