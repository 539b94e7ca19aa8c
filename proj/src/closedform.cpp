#include "hybridkin/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybridkin::cc {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kAxisRadius = 1e-12;  // [m], on-axis degeneracy threshold

// Constant-curvature arc length required for the tube tip to reach the
// base-frame point with cylindrical coordinates (r_i, z_i):
// tan(k/2) = r_i / z_i, rho = chord / (2 sin(k/2)), arc = rho k.
double arc_length_to(double r_i, double z_i) {
  if (r_i < kAxisRadius) {
    return (z_i >= 0.0) ? z_i : std::numeric_limits<double>::infinity();
  }
  const double k = 2.0 * std::atan2(r_i, z_i);
  const double chord = std::hypot(r_i, z_i);
  const double s = std::sin(0.5 * k);
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  return k * chord / (2.0 * s);
}
}  // namespace

double CCParams::radial_limit() const { return (r_d > 0.0) ? r_d : 2.0 * l_t / kPi; }

void CCParams::validate() const {
  if (l_t <= 0.0) throw std::invalid_argument("CCParams: l_t must be > 0");
  if (EI <= 0.0) throw std::invalid_argument("CCParams: EI must be > 0");
  if (d_t <= 0.0) throw std::invalid_argument("CCParams: d_t must be > 0");
  if (radial_limit() <= 0.0) throw std::invalid_argument("CCParams: r_d must be > 0");
  if (n < 1) throw std::invalid_argument("CCParams: n must be >= 1");
  if (d_c <= 0.0) throw std::invalid_argument("CCParams: d_c must be > 0");
}

geom::Pose forward_tube_cc(const CCParams& params, double phi, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("forward_tube_cc: kappa must be >= 0");
  const Mat3 Rz = geom::rot_about_axis(3, phi);
  geom::Pose out;
  if (kappa * params.l_t < 1e-12) {
    out.position = params.base.position + params.base.orientation * (Rz * Vec3(0, 0, params.l_t));
    out.orientation = params.base.orientation * Rz;
    return out;
  }
  const double rho = 1.0 / kappa;
  const double k = params.l_t * kappa;
  const Vec3 w(rho * (1.0 - std::cos(k)), 0.0, rho * std::sin(k));
  out.position = params.base.position + params.base.orientation * (Rz * w);
  out.orientation = params.base.orientation * Rz * geom::rot_about_axis(2, k);
  return out;
}

ChainLine forward_chain_line(const geom::Pose& base, const Vec3& b_hat, double extension) {
  const double n = b_hat.norm();
  if (n < 1e-12) throw std::invalid_argument("forward_chain_line: zero field direction");
  const Vec3 dir = b_hat / n;
  return {base.position + extension * dir, dir};
}

ChainLine forward_hybrid_cc(const CCParams& params, double phi, double kappa, const Vec3& b_hat,
                            double extension) {
  return forward_chain_line(forward_tube_cc(params, phi, kappa), b_hat, extension);
}

double tendon_force_for_bend(double EI, double d_t, double r_i, double k) {
  if (r_i <= 0.0) throw std::domain_error("tendon_force_for_bend: degenerate r_i");
  if (k < 0.0) throw std::invalid_argument("tendon_force_for_bend: k must be >= 0");
  return 2.0 * EI * (1.0 - std::cos(k)) / (d_t * r_i);
}

IKSolution inverse_kinematics(const Vec3& p_g, const Vec3& v_g, const CCParams& params,
                              const IKOptions& options) {
  params.validate();
  const double v_norm = v_g.norm();
  if (v_norm < 1e-12) throw std::invalid_argument("inverse_kinematics: zero direction");
  // keep unit inputs bit-exact: B = v_g
  const Vec3 v_world = (std::abs(v_norm - 1.0) < 1e-12) ? v_g : Vec3(v_g / v_norm);

  // Work in the base frame.
  const Mat3 Rb = params.base.orientation;
  const Vec3 p = Rb.transpose() * (p_g - params.base.position);
  const Vec3 v = Rb.transpose() * v_world;

  const double r_d = params.radial_limit();
  const double reach = params.n * params.d_c;
  const double r_target = std::hypot(p.x(), p.y());
  if (r_target > r_d + reach) throw InfeasibleTarget("radial reach exceeded");

  // Candidate window on the backward ray p(s) = p - v s inside the cylinder.
  const double a = v.x() * v.x() + v.y() * v.y();
  const double b = p.x() * v.x() + p.y() * v.y();
  const double c = p.x() * p.x() + p.y() * p.y() - r_d * r_d;
  double w_lo, w_hi;
  if (a < 1e-14) {
    if (c > 0.0) throw InfeasibleTarget("no real intersection");
    w_lo = 0.0;
    w_hi = reach;
  } else {
    const double disc = b * b - a * c;
    if (disc < 0.0) throw InfeasibleTarget("no real intersection");
    const double sq = std::sqrt(disc);
    w_lo = std::max((b - sq) / a, 0.0);
    w_hi = std::min((b + sq) / a, reach);
    if (w_lo > w_hi) throw InfeasibleTarget("s* interval empty");
  }

  double s_star;
  double fixed_k_len = 0.0;
  if (options.fixed_k) {
    s_star = w_lo;  // smallest feasible extension; k supplied by the caller
    fixed_k_len = *options.fixed_k;
  } else {
    // Smallest s whose implied arc length fits the tube.
    auto fits = [&](double s) {
      const Vec3 pi = p - s * v;
      return arc_length_to(std::hypot(pi.x(), pi.y()), pi.z()) <= params.l_t * (1.0 + 1e-12);
    };
    if (fits(w_lo)) {
      s_star = w_lo;
    } else {
      const int N = 256;
      double lo = w_lo, hi = std::numeric_limits<double>::quiet_NaN();
      for (int i = 1; i <= N; ++i) {
        const double s = w_lo + (w_hi - w_lo) * i / N;
        if (fits(s)) {
          hi = s;
          break;
        }
        lo = s;
      }
      if (!std::isfinite(hi)) throw InfeasibleTarget("s* interval empty");
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fits(mid) ? hi : lo) = mid;
      }
      s_star = hi;
    }
  }

  IKSolution sol;
  sol.b_hat = v_world;
  sol.s_star = s_star;
  sol.n_e = std::max(0, static_cast<int>(std::ceil(s_star / params.d_c - 1e-9)));
  const Vec3 pi = p - s_star * v;
  sol.p_i = pi;
  const auto cyl = geom::to_cylindrical(pi);
  sol.phi = cyl.phi;

  if (options.fixed_k) {
    const double k = fixed_k_len;
    if (k <= 0.0) throw std::invalid_argument("inverse_kinematics: fixed_k must be > 0");
    sol.k = k;
    sol.rho = cyl.r / (1.0 - std::cos(k));
    sol.arc_length = sol.rho * k;
    sol.tension = (cyl.r > kAxisRadius) ? tendon_force_for_bend(params.EI, params.d_t, cyl.r, k) : 0.0;
  } else if (cyl.r < kAxisRadius) {
    sol.k = 0.0;
    sol.rho = std::numeric_limits<double>::infinity();
    sol.arc_length = cyl.z;
    sol.tension = 0.0;
    sol.phi = 0.0;
  } else {
    sol.k = 2.0 * std::atan2(cyl.r, cyl.z);
    const double chord = std::hypot(cyl.r, cyl.z);
    sol.rho = chord / (2.0 * std::sin(0.5 * sol.k));
    sol.arc_length = sol.rho * sol.k;
    sol.tension = tendon_force_for_bend(params.EI, params.d_t, cyl.r, sol.k);
  }

  // Approach-angle diagnostics in the local radial frame at the target.
  const Vec3 rhat = (r_target > kAxisRadius)
                        ? Vec3(p.x() / r_target, p.y() / r_target, 0.0)
                        : Vec3::UnitX();
  const Vec3 that = Vec3::UnitZ().cross(rhat);
  const double vr = v.dot(rhat);
  sol.alpha_g = 2.0 * std::atan2(std::abs(v.dot(Vec3::UnitZ())), vr);
  sol.beta_g = 2.0 * std::atan2(std::abs(v.dot(that)), vr);
  sol.within_angle_range = sol.alpha_g <= alpha_max(r_target, params) + 1e-9 &&
                           sol.beta_g <= beta_max(r_target, params) + 1e-9;
  return sol;
}

double alpha_max(double r, const CCParams& params) {
  if (r < 0.0) throw std::invalid_argument("alpha_max: r must be >= 0");
  const double r_d = params.radial_limit();
  const double reach = params.n * params.d_c;
  if (r > r_d + reach) return 0.0;
  if (r > r_d) return 2.0 * std::acos(std::clamp((r - r_d) / reach, -1.0, 1.0));
  if (r > r_d - params.d_c) return kPi;
  if (r >= params.d_c) return 2.0 * kPi;
  return kPi;
}

double beta_max(double r, const CCParams& params) {
  if (r <= 0.0) {
    if (r < 0.0) throw std::invalid_argument("beta_max: r must be > 0");
    return kPi;
  }
  const double r_d = params.radial_limit();
  const double reach = params.n * params.d_c;
  if (r > r_d + reach) return 0.0;
  if (r > r_d) {
    // Tangency regime: the backward ray can graze the r_d circle within
    // reach; beyond it the full-extension triangle (law of cosines) governs.
    if (r * r <= r_d * r_d + reach * reach) {
      return 2.0 * std::asin(std::clamp(r_d / r, -1.0, 1.0));
    }
    return 2.0 * std::acos(std::clamp((r * r + reach * reach - r_d * r_d) / (2.0 * r * reach),
                                      -1.0, 1.0));
  }
  if (r > r_d - params.d_c) return kPi;
  if (r >= params.d_c) return 2.0 * kPi;
  return kPi;
}

std::vector<WorkspaceEntry> workspace_sweep(const CCParams& params, double r_min, double r_max,
                                            int samples) {
  if (!(r_min < r_max)) throw std::invalid_argument("workspace_sweep: need r_min < r_max");
  if (samples < 2) throw std::invalid_argument("workspace_sweep: samples must be >= 2");
  std::vector<WorkspaceEntry> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double r = r_min + (r_max - r_min) * i / (samples - 1);
    out.push_back({r, alpha_max(r, params), beta_max(std::max(r, 0.0), params)});
  }
  return out;
}

}  // namespace hybridkin::cc
