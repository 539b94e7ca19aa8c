#include "hybridkin/cosserat.hpp"

#include <algorithm>
#include <cmath>

#include "hybridkin/geom.hpp"

namespace hybridkin::rod {

using geom::exp_so3;
using geom::skew;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegenerateTangent = 1e-9;

// Theta' = dexpinv_{-Theta}(u) = u + 1/2 [Theta, u] + 1/12 [Theta, [Theta, u]]
// for R = R0 exp(Theta) with body rates R' = R skew(u); truncation is
// sufficient for 4th-order accuracy of the RKMK step.
Vec3 dexpinv(const Vec3& theta, const Vec3& u) {
  const Vec3 c1 = theta.cross(u);
  return u + 0.5 * c1 + (1.0 / 12.0) * theta.cross(c1);
}
}  // namespace

Mat3 TubeParams::Kse() const {
  return Vec3(shear_modulus * area, shear_modulus * area, elastic_modulus * area).asDiagonal();
}

Mat3 TubeParams::Kbt() const {
  return Vec3(elastic_modulus * I_xx, elastic_modulus * I_yy, shear_modulus * J_zz).asDiagonal();
}

void TubeParams::validate() const {
  if (length <= 0.0) throw std::invalid_argument("TubeParams: length must be > 0");
  if (elastic_modulus <= 0.0) throw std::invalid_argument("TubeParams: elastic modulus must be > 0");
  if (shear_modulus <= 0.0) throw std::invalid_argument("TubeParams: shear modulus must be > 0");
  if (area <= 0.0 || I_xx <= 0.0 || I_yy <= 0.0 || J_zz <= 0.0) {
    throw std::invalid_argument("TubeParams: section properties must be > 0");
  }
  if (v0.norm() <= 0.0) throw std::invalid_argument("TubeParams: |v0| must be > 0");
  if (mass_density < 0.0) throw std::invalid_argument("TubeParams: mass density must be >= 0");
  if (!geom::is_rotation(base.orientation, 1e-9)) {
    throw std::invalid_argument("TubeParams: base orientation is not a rotation");
  }
}

TubeParams TubeParams::annulus(double outer_d, double inner_d) {
  TubeParams p;
  p.diameter = outer_d;
  p.area = kPi / 4.0 * (outer_d * outer_d - inner_d * inner_d);
  p.I_xx = kPi / 64.0 * (std::pow(outer_d, 4) - std::pow(inner_d, 4));
  p.I_yy = p.I_xx;
  p.J_zz = 2.0 * p.I_xx;
  return p;
}

Vec3 RodShape::tip_tangent() const { return samples.back().R.col(2); }

Vec3 RodShape::tangent_at(double s) const {
  const auto& v = samples;
  if (s <= v.front().s) return v.front().R.col(2);
  if (s >= v.back().s) return v.back().R.col(2);
  auto it = std::upper_bound(v.begin(), v.end(), s,
                             [](double x, const RodState& st) { return x < st.s; });
  const RodState& b = *it;
  const RodState& a = *(it - 1);
  const double w = (s - a.s) / (b.s - a.s);
  return ((1.0 - w) * a.R.col(2) + w * b.R.col(2)).normalized();
}

Vec3 RodShape::position_at(double s) const {
  const auto& v = samples;
  if (s <= v.front().s) return v.front().p;
  if (s >= v.back().s) return v.back().p;
  auto it = std::upper_bound(v.begin(), v.end(), s,
                             [](double x, const RodState& st) { return x < st.s; });
  const RodState& b = *it;
  const RodState& a = *(it - 1);
  const double w = (s - a.s) / (b.s - a.s);
  return (1.0 - w) * a.p + w * b.p;
}

std::pair<Vec3, Vec3> constitutive(const Vec3& u, const Vec3& v, const TubeParams& params) {
  return {params.Kse() * (v - params.v0), params.Kbt() * (u - params.u0)};
}

std::pair<Vec3, Vec3> strains_from_loads(const Vec3& n, const Vec3& m, const TubeParams& params) {
  const Vec3 u = params.u0 + params.Kbt().inverse() * m;
  const Vec3 v = params.v0 + params.Kse().inverse() * n;
  return {u, v};
}

Vec3 tendon_path(const RodState& state, const TubeParams& params) {
  return state.p + 0.5 * params.diameter * state.R.col(0);
}

DistributedLoad tendon_distributed_load(const RodState& state, const Vec3& u, const Vec3& v,
                                        const Vec3& udot, const Vec3& vdot, double tension,
                                        const TubeParams& params) {
  if (tension < 0.0) throw std::invalid_argument("tendon_distributed_load: tension must be >= 0");
  const Vec3 r = 0.5 * params.diameter * Vec3::UnitX();  // tendon offset, body frame
  const Vec3 ptd = v + u.cross(r);                       // p_t' in body coordinates
  const double nrm = ptd.norm();
  if (nrm < kDegenerateTangent) {
    throw std::domain_error("tendon_distributed_load: degenerate tendon tangent");
  }
  const Vec3 ptdd = u.cross(ptd) + vdot + udot.cross(r);  // p_t'' in body coordinates
  const Mat3 S = skew(ptd);
  const Vec3 ft_body = -tension / (nrm * nrm * nrm) * (S * (S * ptdd));
  DistributedLoad out;
  out.force = state.R * ft_body;
  out.torque = state.R * r.cross(ft_body);  // arm p_t - p_c
  return out;
}

StateDerivative ode_rhs(const RodState& state, const DistributedLoad& applied,
                        const TubeParams& params) {
  const auto [u, v] = strains_from_loads(state.n, state.m, params);
  const Vec3 f_b = state.R.transpose() * applied.force;
  const Vec3 tau_b = state.R.transpose() * applied.torque;
  StateDerivative d;
  d.pdot = state.R * v;
  d.u = u;
  d.ndot = -u.cross(state.n) - f_b;
  d.mdot = -u.cross(state.m) - v.cross(state.n) - tau_b;
  return d;
}

namespace {

// Derivative of (p, n, m) plus the body angular rate, with the tendon load
// closed implicitly: f_t is linear in (n', m') through (u', v'), so (n', m')
// solve a 6x6 linear system at every evaluation.
struct ClosedRhs {
  const TubeParams& params;
  double tension;
  Vec3 gravity_force;  // mass_density * g, world frame [N/m]

  StateDerivative operator()(const RodState& state) const {
    const auto [u, v] = strains_from_loads(state.n, state.m, params);
    StateDerivative d;
    d.pdot = state.R * v;
    d.u = u;

    const Vec3 fg_b = state.R.transpose() * gravity_force;
    const Vec3 rhs_n = -u.cross(state.n) - fg_b;
    const Vec3 rhs_m = -u.cross(state.m) - v.cross(state.n);
    if (tension == 0.0) {
      d.ndot = rhs_n;
      d.mdot = rhs_m;
      return d;
    }

    const Vec3 r = 0.5 * params.diameter * Vec3::UnitX();
    const Vec3 ptd = v + u.cross(r);
    const double nrm = ptd.norm();
    if (nrm < kDegenerateTangent) {
      throw std::domain_error("integrate_rod: degenerate tendon tangent");
    }
    const Mat3 S = skew(ptd);
    const Mat3 C = -tension / (nrm * nrm * nrm) * (S * S);
    const Vec3 a = u.cross(ptd);
    const Mat3 rx = skew(r);
    const Mat3 CKse = C * params.Kse().inverse();
    const Mat3 CrxKbt = C * rx * params.Kbt().inverse();

    Mat6 A;
    A.block<3, 3>(0, 0) = Mat3::Identity() + CKse;
    A.block<3, 3>(0, 3) = -CrxKbt;
    A.block<3, 3>(3, 0) = rx * CKse;
    A.block<3, 3>(3, 3) = Mat3::Identity() - rx * CrxKbt;
    Vec6 b;
    b.head<3>() = rhs_n - C * a;
    b.tail<3>() = rhs_m - rx * (C * a);
    const Vec6 x = A.partialPivLu().solve(b);
    d.ndot = x.head<3>();
    d.mdot = x.tail<3>();
    return d;
  }
};

}  // namespace

RodShape integrate_rod(const RodState& initial, double tension, const Vec3& gravity,
                       const std::vector<PointLoad>& point_loads, const TubeParams& params,
                       int steps) {
  if (steps < 16) throw std::invalid_argument("integrate_rod: steps must be >= 16");
  if (tension < 0.0) throw std::invalid_argument("integrate_rod: tension must be >= 0");

  const double h = params.length / steps;
  // Node index for each point load: nearest grid node >= s_i.
  std::vector<std::vector<Vec3>> jumps(steps + 1);
  for (const auto& pl : point_loads) {
    if (pl.s < 0.0 || pl.s > params.length + 1e-12) {
      throw std::invalid_argument("integrate_rod: point load outside [0, l_t]");
    }
    const int node = std::min(steps, static_cast<int>(std::ceil(pl.s / h - 1e-9)));
    jumps[std::max(node, 0)].push_back(pl.force);
  }

  const ClosedRhs rhs{params, tension, params.mass_density * gravity};

  RodShape shape;
  shape.tension = tension;
  shape.base_internal_force = initial.n;
  shape.base_internal_moment = initial.m;
  shape.samples.reserve(steps + 1);

  RodState state = initial;
  state.s = 0.0;
  for (const Vec3& f : jumps[0]) state.n -= state.R.transpose() * f;
  shape.samples.push_back(state);

  for (int k = 0; k < steps; ++k) {
    // RKMK4: classical RK4 on (p, n, m, Theta) with R = R0 exp(Theta).
    const Mat3 R0 = state.R;
    auto eval = [&](const Vec3& theta, const Vec3& p, const Vec3& n, const Vec3& m,
                    Vec3& dp, Vec3& dn, Vec3& dm, Vec3& dtheta) {
      RodState st;
      st.p = p;
      st.R = R0 * exp_so3(theta);
      st.n = n;
      st.m = m;
      const StateDerivative d = rhs(st);
      dp = d.pdot;
      dn = d.ndot;
      dm = d.mdot;
      dtheta = dexpinv(theta, d.u);
    };

    Vec3 dp1, dn1, dm1, dt1, dp2, dn2, dm2, dt2, dp3, dn3, dm3, dt3, dp4, dn4, dm4, dt4;
    eval(Vec3::Zero(), state.p, state.n, state.m, dp1, dn1, dm1, dt1);
    eval(0.5 * h * dt1, state.p + 0.5 * h * dp1, state.n + 0.5 * h * dn1,
         state.m + 0.5 * h * dm1, dp2, dn2, dm2, dt2);
    eval(0.5 * h * dt2, state.p + 0.5 * h * dp2, state.n + 0.5 * h * dn2,
         state.m + 0.5 * h * dm2, dp3, dn3, dm3, dt3);
    eval(h * dt3, state.p + h * dp3, state.n + h * dn3, state.m + h * dm3, dp4, dn4, dm4, dt4);

    state.p += h / 6.0 * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4);
    state.n += h / 6.0 * (dn1 + 2.0 * dn2 + 2.0 * dn3 + dn4);
    state.m += h / 6.0 * (dm1 + 2.0 * dm2 + 2.0 * dm3 + dm4);
    state.R = R0 * exp_so3(h / 6.0 * (dt1 + 2.0 * dt2 + 2.0 * dt3 + dt4));
    state.s = (k + 1 == steps) ? params.length : (k + 1) * h;

    for (const Vec3& f : jumps[k + 1]) state.n -= state.R.transpose() * f;
    shape.samples.push_back(state);
  }
  return shape;
}

namespace {

// Damped Newton (Levenberg-Marquardt style) on the 6 base unknowns.
template <typename ResidualFn>
ShootingResult shoot(const TubeParams& params, double tension, const Vec3& gravity,
                     const std::vector<PointLoad>& point_loads, const ShootingSettings& settings,
                     ResidualFn&& tip_residual) {
  params.validate();
  const double scale = 1.0 / (1.0 + tension);

  Vec6 x = settings.initial_guess.value_or(Vec6::Zero());

  auto integrate = [&](const Vec6& guess) {
    RodState init;
    init.p = params.base.position;
    init.R = params.base.orientation;
    init.n = guess.head<3>();
    init.m = guess.tail<3>();
    return integrate_rod(init, tension, gravity, point_loads, params, settings.steps);
  };

  auto residual_of = [&](const RodShape& shape) -> Vec6 { return tip_residual(shape); };

  RodShape shape = integrate(x);
  Vec6 r = residual_of(shape);
  double rnorm = r.norm() * scale;

  RodShape best = shape;
  double best_norm = rnorm;

  double mu = 1e-8;
  int iter = 0;
  // Polish well below the acceptance tolerance; Newton's quadratic tail makes
  // the extra iterations cheap and keeps solution error far under residual.
  const double polish = settings.tolerance * 1e-4;
  for (; iter < settings.max_iterations && rnorm >= polish; ++iter) {
    Mat6 J;
    for (int j = 0; j < 6; ++j) {
      Vec6 xp = x;
      xp[j] += settings.fd_step;
      J.col(j) = (residual_of(integrate(xp)) - r) / settings.fd_step;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      const Mat6 H = J.transpose() * J + mu * Mat6::Identity();
      const Vec6 dx = H.ldlt().solve(-J.transpose() * r);
      const Vec6 xt = x + dx;
      RodShape st = integrate(xt);
      const Vec6 rt = residual_of(st);
      const double nt = rt.norm() * scale;
      if (nt < rnorm) {
        x = xt;
        shape = std::move(st);
        r = rt;
        rnorm = nt;
        mu = std::max(mu * 0.25, 1e-14);
        accepted = true;
        break;
      }
      mu *= 8.0;
    }
    if (rnorm < best_norm) {
      best = shape;
      best_norm = rnorm;
    }
    if (!accepted) break;
  }

  if (rnorm >= settings.tolerance) {
    throw ShootingFailure("shooting did not converge: residual " + std::to_string(best_norm),
                          best_norm, best);
  }
  shape.base_internal_force = x.head<3>();
  shape.base_internal_moment = x.tail<3>();
  return {std::move(shape), rnorm, iter};
}

}  // namespace

ShootingResult solve_bvp_shooting(const TubeParams& params, double tension, const Vec3& gravity,
                                  const std::vector<PointLoad>& point_loads,
                                  const Vec3& tip_force, const ShootingSettings& settings) {
  if (tension < 0.0) throw std::invalid_argument("solve_bvp_shooting: tension must be >= 0");
  return shoot(params, tension, gravity, point_loads, settings, [&](const RodShape& shape) {
    const RodState& tip = shape.tip();
    const Vec3 t = (tip.R * strains_from_loads(tip.n, tip.m, params).second).normalized();
    const Vec3 F = -tension * t + tip_force;
    const Vec3 arm = tendon_path(tip, params) - tip.p;
    const Vec3 T = arm.cross(-tension * t);
    Vec6 r;
    r.head<3>() = tip.R * tip.n - F;
    r.tail<3>() = tip.R * tip.m - T;
    return r;
  });
}

ShootingResult solve_bvp_tip_moment(const TubeParams& params, const Vec3& tip_moment,
                                    const ShootingSettings& settings) {
  return shoot(params, 0.0, Vec3::Zero(), {}, settings, [&](const RodShape& shape) {
    const RodState& tip = shape.tip();
    Vec6 r;
    r.head<3>() = tip.R * tip.n;
    r.tail<3>() = tip.R * tip.m - tip_moment;
    return r;
  });
}

}  // namespace hybridkin::rod
