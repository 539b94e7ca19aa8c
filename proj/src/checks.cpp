#include "hybridkin/checks.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hybridkin/chain.hpp"
#include "hybridkin/closedform.hpp"
#include "hybridkin/cosserat.hpp"
#include "hybridkin/hybrid.hpp"
#include "hybridkin/magnetics.hpp"

namespace hybridkin::checks {

namespace {
constexpr double kPi = 3.14159265358979323846;

using Rng = std::mt19937_64;

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6) v = Vec3(g(rng), g(rng), g(rng));
  return v.normalized();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

// Random contact chain around the +z axis with the first `fixed` balls on a
// straight stack, used by the gradient check.
chain::ChainConfig random_chain(Rng& rng, const chain::ChainParams& p, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  chain::ChainConfig cfg;
  cfg.positions.resize(p.count);
  cfg.dipoles.resize(p.count);
  Vec3 pos = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();
  for (int i = 0; i < p.count; ++i) {
    cfg.positions[i] = pos;
    Vec3 m = (dir + u(rng) * random_unit(rng)).normalized();
    cfg.dipoles[i] = p.ball.dipole_magnitude * m;
    dir = (dir + u(rng) * random_unit(rng)).normalized();
    pos += p.ball.diameter * dir;
  }
  return cfg;
}

CheckResult check_rotation_exponential(Rng& rng) {
  double worst = 0.0;
  std::uniform_real_distribution<double> u(0.0, 4.0 * kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = u(rng) * random_unit(rng);
    const Mat3 R = geom::exp_so3(w);
    worst = std::max(worst, (R.transpose() * R - Mat3::Identity()).norm());
    worst = std::max(worst, std::abs(R.determinant() - 1.0));
    worst = std::max(worst, (R * geom::exp_so3(-w) - Mat3::Identity()).norm());
  }
  return {"rotation_exponential", worst < 1e-12, "max deviation " + fmt(worst)};
}

CheckResult check_dipole_div_curl(Rng& rng, double moment) {
  double worst = 0.0;
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Vec3 r = 0.05 * random_unit(rng);
    const Vec3 mu = moment * random_unit(rng);
    Mat3 J;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      J.col(c) = (mag::dipole_field(r + dp, mu) - mag::dipole_field(r - dp, mu)) / (2.0 * h);
    }
    const double scale = mag::dipole_field(r, mu).norm() / 0.05;
    const double div = std::abs(J.trace());
    const double curl = (J - J.transpose()).norm();
    worst = std::max(worst, std::max(div, curl) / scale);
  }
  return {"dipole_divergence_curl", worst < 1e-6, "max |div|,|curl| / (|B|/r) = " + fmt(worst)};
}

CheckResult check_dipole_gradient_fd(Rng& rng, double moment) {
  double worst = 0.0;
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const Vec3 r = (0.02 + 0.1 * i / 20.0) * random_unit(rng);
    const Vec3 mu = moment * random_unit(rng);
    const Mat3 G = mag::dipole_field_gradient(r, mu);
    Mat3 J;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      J.col(c) = (mag::dipole_field(r + dp, mu) - mag::dipole_field(r - dp, mu)) / (2.0 * h);
    }
    worst = std::max(worst, (G - J).norm() / std::max(G.norm(), 1e-30));
  }
  return {"dipole_gradient_fd", worst < 1e-6, "max relative error " + fmt(worst)};
}

CheckResult check_pair_force_fd(Rng& rng, const mag::BallParams& ball) {
  double worst = 0.0;
  const double h = 1e-8;
  const double mu = std::max(ball.dipole_magnitude, 1e-6);
  for (int i = 0; i < 20; ++i) {
    const Vec3 pj = Vec3::Zero();
    const Vec3 pi = (1.0 + 0.5 * i / 20.0) * ball.diameter * random_unit(rng);
    const Vec3 mi = mu * random_unit(rng);
    const Vec3 mj = mu * random_unit(rng);
    const Vec3 f = mag::magnetic_force(mi, mag::dipole_field_gradient(pi - pj, mj));
    Vec3 f_fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      const double up = -mi.dot(mag::dipole_field(pi + dp - pj, mj));
      const double um = -mi.dot(mag::dipole_field(pi - dp - pj, mj));
      f_fd[c] = -(up - um) / (2.0 * h);
    }
    worst = std::max(worst, (f - f_fd).norm() / std::max(f.norm(), 1e-30));
  }
  return {"pair_force_energy_fd", worst < 1e-5, "max relative error " + fmt(worst)};
}

CheckResult check_energy_identity(Rng& rng, const config::RobotConfig& cfg) {
  chain::ChainParams p = cfg.chain;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const chain::ChainConfig c = random_chain(rng, p, 0.3);
    const mag::FieldSource src = mag::UniformField{0.03 * random_unit(rng)};
    const auto e = mag::chain_energy(c, src, p.ball, Vec3::Zero(), 0.0, p.extended);
    const double sum = e.U_e + e.U_b + e.U_g + e.U_s;
    worst = std::max(worst, std::abs(e.U_total - sum) / std::max(std::abs(sum), 1e-30));
    // translation invariance under a uniform source
    chain::ChainConfig moved = c;
    const Vec3 shift = 0.1 * random_unit(rng);
    for (auto& q : moved.positions) q += shift;
    const auto e2 = mag::chain_energy(moved, src, p.ball, Vec3::Zero(), 0.0, p.extended);
    worst = std::max(worst, std::abs(e2.U_total - e.U_total) /
                                std::max(std::abs(e.U_total), 1e-30));
  }
  return {"energy_sum_translation", worst < 1e-10, "max relative deviation " + fmt(worst)};
}

CheckResult check_chain_gradient(Rng& rng, const config::RobotConfig& cfg) {
  chain::ChainParams p = cfg.chain;
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const chain::ChainConfig c = random_chain(rng, p, 0.3);
    const chain::ChainConstraints cons = chain::constraints_from_guess(c, p);
    mag::FieldSource src = mag::UniformField{0.03 * random_unit(rng)};
    if (rep % 2 == 1) {
      mag::Dipole d;
      d.position = c.positions.front() + (0.08 + 0.04 * rep / 20.0) * random_unit(rng);
      d.moment = 200.0 * random_unit(rng);
      src = d;
    }
    const Vec3 gravity(-9.81, 0.0, 0.0);
    const auto [U, g] = chain::energy_and_gradient(c, cons, src, gravity, p);
    const int dim = static_cast<int>(g.size());
    Eigen::VectorXd g_fd(dim);
    const double h = 1e-6;
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd dx = Eigen::VectorXd::Zero(dim);
      dx[i] = h;
      const double up = mag::chain_energy(chain::retract(c, cons, p, dx), src, p.ball, gravity,
                                          p.sleeve_EI, p.extended)
                            .U_total;
      dx[i] = -h;
      const double um = mag::chain_energy(chain::retract(c, cons, p, dx), src, p.ball, gravity,
                                          p.sleeve_EI, p.extended)
                            .U_total;
      g_fd[i] = (up - um) / (2.0 * h);
    }
    worst = std::max(worst, (g - g_fd).norm() / std::max(g_fd.norm(), 1e-30));
  }
  return {"chain_gradient_fd", worst < 1e-5, "max relative error " + fmt(worst)};
}

CheckResult check_rod_basics(const config::RobotConfig& cfg) {
  rod::RodState init;
  init.p = cfg.tube.base.position;
  init.R = cfg.tube.base.orientation;
  rod::TubeParams straight = cfg.tube;
  straight.u0 = Vec3::Zero();
  const rod::RodShape s = rod::integrate_rod(init, 0.0, Vec3::Zero(), {}, straight, 200);
  const Vec3 expect = straight.base.position +
                      straight.length * (straight.base.orientation * Vec3::UnitZ());
  const double err = (s.tip().p - expect).norm();
  return {"rod_straight_reference", err < 1e-12, "tip deviation " + fmt(err) + " m"};
}

CheckResult check_rod_richardson(const config::RobotConfig& cfg) {
  const double tension = 1.4 * 9.81;
  const Vec3 gravity(-9.81, 0.0, 0.0);
  const auto sol = rod::solve_bvp_shooting(cfg.tube, tension, gravity);
  rod::RodState init;
  init.p = cfg.tube.base.position;
  init.R = cfg.tube.base.orientation;
  init.n = sol.shape.base_internal_force;
  init.m = sol.shape.base_internal_moment;
  const rod::RodShape a = rod::integrate_rod(init, tension, gravity, {}, cfg.tube, 200);
  const rod::RodShape b = rod::integrate_rod(init, tension, gravity, {}, cfg.tube, 400);
  const double err = (a.tip().p - b.tip().p).norm();
  return {"rod_richardson_200_400", err < 1e-8, "tip change " + fmt(err) + " m"};
}

CheckResult check_rod_force_balance(const config::RobotConfig& cfg) {
  const double tension = 1.4 * 9.81;
  const Vec3 gravity(-9.81, 0.0, 0.0);
  const auto sol = rod::solve_bvp_shooting(cfg.tube, tension, gravity);
  const rod::RodShape& s = sol.shape;
  // applied loads: tendon tip force, integrated tendon distributed force
  // (+lambda * (t_t(L) - t_t(0))), distributed gravity
  const auto& tip = s.tip();
  const auto [ut, vt] = rod::strains_from_loads(tip.n, tip.m, cfg.tube);
  const Vec3 t_tip = (tip.R * vt).normalized();
  const Vec3 r_off = 0.5 * cfg.tube.diameter * Vec3::UnitX();
  const auto& base = s.samples.front();
  const auto [ub, vb] = rod::strains_from_loads(base.n, base.m, cfg.tube);
  const Vec3 tt_L = (tip.R * (vt + ut.cross(r_off))).normalized();
  const Vec3 tt_0 = (base.R * (vb + ub.cross(r_off))).normalized();
  const Vec3 applied = -tension * t_tip + tension * (tt_L - tt_0) +
                       cfg.tube.mass_density * gravity * cfg.tube.length;
  const Vec3 reaction = -(base.R * s.base_internal_force);
  const double err = (reaction + applied).norm();
  return {"rod_force_balance", err < 1e-8, "imbalance " + fmt(err) + " N"};
}

CheckResult check_cc_arc_oracle(const config::RobotConfig& cfg) {
  double worst = 0.0;
  const double EI = cfg.tube.elastic_modulus * cfg.tube.I_yy;
  for (double bend : {10.0, 45.0, 90.0}) {
    const double k = bend * kPi / 180.0;
    const double kappa = k / cfg.tube.length;
    const auto sol = rod::solve_bvp_tip_moment(cfg.tube, EI * kappa * Vec3::UnitY());
    const double rho = 1.0 / kappa;
    const Vec3 expect = cfg.tube.base.position +
                        cfg.tube.base.orientation *
                            Vec3(rho * (1.0 - std::cos(k)), 0.0, rho * std::sin(k));
    worst = std::max(worst, (sol.shape.tip().p - expect).norm());
  }
  const bool pass = worst < 1e-3 * cfg.tube.length;
  return {"cc_arc_oracle", pass, "max tip error " + fmt(worst) + " m"};
}

CheckResult check_ik_roundtrip(Rng& rng, const config::RobotConfig& cfg) {
  const cc::CCParams p = cfg.cc_params();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_pos = 0.0, worst_dir = 0.0;
  int rejected = 0;
  for (int i = 0; i < 100; ++i) {
    const double kappa = (0.05 + 0.9 * u01(rng)) * (0.5 * kPi) / p.l_t;
    const double phi = 2.0 * kPi * (u01(rng) - 0.5);
    const Vec3 b = random_unit(rng);
    const double ext = (0.2 + 0.8 * u01(rng)) * p.n * p.d_c;
    const auto fk = cc::forward_hybrid_cc(p, phi, kappa, b, ext);
    try {
      const auto ik = cc::inverse_kinematics(fk.tip, fk.tangent, p);
      cc::CCParams q = p;
      q.l_t = std::isfinite(ik.arc_length) ? ik.arc_length : p.l_t;
      const auto back = cc::forward_hybrid_cc(q, ik.phi, (ik.k > 0.0) ? ik.k / ik.arc_length : 0.0,
                                              ik.b_hat, ik.s_star);
      worst_pos = std::max(worst_pos, (back.tip - fk.tip).norm());
      worst_dir = std::max(worst_dir, (back.tangent - fk.tangent).norm());
    } catch (const cc::InfeasibleTarget&) {
      ++rejected;
    }
  }
  const bool pass = rejected == 0 && worst_pos < 1e-6 * p.l_t && worst_dir < 1e-6;
  return {"ik_roundtrip", pass,
          "max pos err " + fmt(worst_pos) + " m, dir err " + fmt(worst_dir) + ", rejected " +
              std::to_string(rejected)};
}

CheckResult check_workspace_identities(const config::RobotConfig& cfg) {
  const cc::CCParams p = cfg.cc_params();
  const double r_d = p.radial_limit();
  const double reach = p.n * p.d_c;
  double worst = 0.0;
  worst = std::max(worst, std::abs(cc::alpha_max(r_d, p) - kPi));
  worst = std::max(worst, std::abs(cc::beta_max(r_d, p) - kPi));
  worst = std::max(worst, std::abs(cc::alpha_max(r_d + reach, p)));
  worst = std::max(worst, std::abs(cc::beta_max(r_d + reach, p)));
  for (int i = 0; i <= 20; ++i) {
    const double r = p.d_c + (r_d - 2.0 * p.d_c) * i / 20.0;
    worst = std::max(worst, std::abs(cc::alpha_max(r, p) - 2.0 * kPi));
    worst = std::max(worst, std::abs(cc::beta_max(r, p) - 2.0 * kPi));
  }
  return {"workspace_identities", worst < 1e-12, "max deviation " + fmt(worst)};
}

CheckResult check_zero_coupling(const config::RobotConfig& cfg) {
  rod::TubeParams tube = cfg.tube;
  chain::ChainParams chainp = cfg.chain;
  chainp.ball.dipole_magnitude = 0.0;
  chainp.ball.mass = 0.0;
  hybrid::ActuationInput in;
  in.tension = 0.4 * 9.81;
  in.gravity = cfg.gravity;
  in.extended = std::min(4, chainp.count);
  in.source = mag::UniformField{Vec3::Zero()};
  const auto dec = hybrid::solve_decoupled(tube, chainp, in);
  const auto cou = hybrid::solve_coupled(tube, chainp, in);
  const double tip_err = (dec.rod.tip().p - cou.rod.tip().p).norm();
  const bool pass = cou.diagnostics.iterations == 1 && tip_err < 1e-9;
  return {"zero_coupling", pass,
          "outer iterations " + std::to_string(cou.diagnostics.iterations) + ", tip diff " +
              fmt(tip_err) + " m"};
}

}  // namespace

std::vector<CheckResult> run_all(const config::RobotConfig& cfg) {
  Rng rng(0x5eedULL);
  std::vector<CheckResult> out;
  out.push_back(check_rotation_exponential(rng));
  out.push_back(check_dipole_div_curl(rng, std::max(cfg.chain.ball.dipole_magnitude, 1e-6)));
  out.push_back(check_dipole_gradient_fd(rng, std::max(cfg.chain.ball.dipole_magnitude, 1e-6)));
  out.push_back(check_pair_force_fd(rng, cfg.chain.ball));
  out.push_back(check_energy_identity(rng, cfg));
  out.push_back(check_chain_gradient(rng, cfg));
  out.push_back(check_rod_basics(cfg));
  out.push_back(check_rod_richardson(cfg));
  out.push_back(check_rod_force_balance(cfg));
  out.push_back(check_cc_arc_oracle(cfg));
  out.push_back(check_ik_roundtrip(rng, cfg));
  out.push_back(check_workspace_identities(cfg));
  out.push_back(check_zero_coupling(cfg));
  return out;
}

}  // namespace hybridkin::checks
