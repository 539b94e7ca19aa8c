#include "hybridkin/hybrid.hpp"

#include <algorithm>
#include <cmath>

namespace hybridkin::hybrid {

namespace {

rod::TubeParams rolled(const rod::TubeParams& tube, double phi) {
  rod::TubeParams t = tube;
  t.base.orientation = tube.base.orientation * geom::rot_about_axis(3, phi);
  return t;
}

chain::ChainParams with_extended(const chain::ChainParams& chainp, int n_e) {
  chain::ChainParams p = chainp;
  p.extended = n_e;
  return p;
}

// Flattened load vector for the outer convergence metric.
Eigen::VectorXd flatten(const ChainLoads& loads) {
  Eigen::VectorXd v(3 * loads.point_loads.size() + 3);
  for (size_t i = 0; i < loads.point_loads.size(); ++i) {
    v.segment<3>(3 * i) = loads.point_loads[i].force;
  }
  v.tail<3>() = loads.tip_force;
  return v;
}

}  // namespace

ChainLoads chain_loads_on_tube(const rod::RodShape& rodShape, const chain::ChainConfig& chain,
                               const chain::ChainParams& params, const mag::FieldSource& src,
                               const Vec3& gravity) {
  const int n = params.count;
  const int n_int = n - params.extended;
  const double d_c = params.ball.diameter;
  const double l_t = rodShape.length();

  // Total field and force on each ball from the source and all other balls.
  std::vector<Vec3> force(n), field(n);
  for (int i = 0; i < n; ++i) {
    field[i] = mag::source_field(src, chain.positions[i]);
    force[i] = mag::magnetic_force(chain.dipoles[i],
                                   mag::source_field_gradient(src, chain.positions[i]));
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 r = chain.positions[i] - chain.positions[j];
      field[i] += mag::dipole_field(r, chain.dipoles[j]);
      force[i] += mag::magnetic_force(chain.dipoles[i],
                                      mag::dipole_field_gradient(r, chain.dipoles[j]));
    }
    force[i] += params.ball.mass * gravity;
  }

  ChainLoads out;
  out.point_loads.reserve(n_int);
  for (int i = 0; i < n_int; ++i) {
    const double s_i = l_t - (n_int - 1 - i) * d_c;
    const Vec3 t = rodShape.tangent_at(s_i);
    const Mat3 P = Mat3::Identity() - t * t.transpose();
    const Vec3 torque = mag::magnetic_torque(chain.dipoles[i], field[i]);
    rod::PointLoad pl;
    pl.s = std::max(0.0, s_i);
    pl.force = P * force[i] + torque.cross(t) / d_c;
    out.point_loads.push_back(pl);
  }
  const Vec3 t_tip = rodShape.tip_tangent();
  const Mat3 P_tip = Mat3::Identity() - t_tip * t_tip.transpose();
  for (int j = n_int; j < n; ++j) {
    out.tip_force += P_tip * force[j];
  }
  return out;
}

HybridShape solve_decoupled(const rod::TubeParams& tube, const chain::ChainParams& chainp,
                            const ActuationInput& input, const SolverSettings& settings) {
  if (input.tension < 0.0) throw std::invalid_argument("solve_decoupled: tension must be >= 0");
  const rod::TubeParams t = rolled(tube, input.base_roll);
  const chain::ChainParams cp = with_extended(chainp, input.extended);
  cp.validate();

  rod::ShootingSettings shoot = settings.shooting;
  shoot.steps = settings.rod_steps;
  rod::ShootingResult rr =
      rod::solve_bvp_shooting(t, input.tension, input.gravity, {}, Vec3::Zero(), shoot);

  const chain::ChainConfig guess = chain::init_chain_guess(rr.shape, cp);
  const chain::ChainConstraints cons = chain::constraints_from_guess(guess, cp);
  const chain::MinimizeResult mr =
      chain::minimize_energy(guess, cons, input.source, input.gravity, cp, settings.chain);

  HybridShape out;
  out.rod = std::move(rr.shape);
  out.chain = mr.config;
  out.diagnostics.iterations = 1;
  out.diagnostics.converged = true;
  out.diagnostics.rod_residual = rr.residual;
  out.diagnostics.chain_energy = mr.energy;
  out.diagnostics.chain_gradient_norm = mr.gradient_norm;
  return out;
}

HybridShape solve_coupled(const rod::TubeParams& tube, const chain::ChainParams& chainp,
                          const ActuationInput& input, const SolverSettings& settings) {
  if (input.tension < 0.0) throw std::invalid_argument("solve_coupled: tension must be >= 0");
  const rod::TubeParams t = rolled(tube, input.base_roll);
  const chain::ChainParams cp = with_extended(chainp, input.extended);
  cp.validate();

  rod::ShootingSettings shoot = settings.shooting;
  shoot.steps = settings.rod_steps;

  HybridShape state;
  ChainLoads applied;  // damped loads fed to the rod
  Eigen::VectorXd prev_raw;
  bool have_applied = false;

  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    std::vector<rod::PointLoad> pls = applied.point_loads;
    const Vec3 tip_extra = applied.tip_force;
    rod::ShootingResult rr =
        rod::solve_bvp_shooting(t, input.tension, input.gravity, pls, tip_extra, shoot);
    shoot.initial_guess = (Vec6() << rr.shape.base_internal_force,
                           rr.shape.base_internal_moment).finished();  // warm start

    const chain::ChainConfig guess = chain::init_chain_guess(rr.shape, cp);
    const chain::ChainConstraints cons = chain::constraints_from_guess(guess, cp);
    const chain::MinimizeResult mr =
        chain::minimize_energy(guess, cons, input.source, input.gravity, cp, settings.chain);

    const ChainLoads raw = chain_loads_on_tube(rr.shape, mr.config, cp, input.source, input.gravity);
    const Eigen::VectorXd raw_vec = flatten(raw);

    state.rod = std::move(rr.shape);
    state.chain = mr.config;
    state.diagnostics.iterations = outer;
    state.diagnostics.rod_residual = rr.residual;
    state.diagnostics.chain_energy = mr.energy;
    state.diagnostics.chain_gradient_norm = mr.gradient_norm;

    const double residual =
        (outer == 1) ? raw_vec.lpNorm<Eigen::Infinity>()
                     : (raw_vec - prev_raw).lpNorm<Eigen::Infinity>();
    state.diagnostics.load_residual = residual;
    if (residual < settings.load_tolerance) {
      state.diagnostics.converged = true;
      // The rod above was solved under the damped loads; one undamped pass
      // removes the blend lag so the returned state is its own fixed point.
      Eigen::VectorXd applied_vec = Eigen::VectorXd::Zero(raw_vec.size());
      if (have_applied) applied_vec = flatten(applied);
      if ((raw_vec - applied_vec).lpNorm<Eigen::Infinity>() > 0.0) {
        rod::ShootingResult rp = rod::solve_bvp_shooting(t, input.tension, input.gravity,
                                                         raw.point_loads, raw.tip_force, shoot);
        const chain::ChainConfig gp = chain::init_chain_guess(rp.shape, cp);
        const chain::ChainConstraints cn = chain::constraints_from_guess(gp, cp);
        const chain::MinimizeResult mp =
            chain::minimize_energy(gp, cn, input.source, input.gravity, cp, settings.chain);
        state.rod = std::move(rp.shape);
        state.chain = mp.config;
        state.diagnostics.rod_residual = rp.residual;
        state.diagnostics.chain_energy = mp.energy;
        state.diagnostics.chain_gradient_norm = mp.gradient_norm;
      }
      return state;
    }
    prev_raw = raw_vec;

    // Damped update of the applied loads.
    if (!have_applied) {
      applied = raw;
      have_applied = true;
    } else {
      for (size_t i = 0; i < applied.point_loads.size(); ++i) {
        applied.point_loads[i].force =
            settings.damping * raw.point_loads[i].force +
            (1.0 - settings.damping) * applied.point_loads[i].force;
        applied.point_loads[i].s = raw.point_loads[i].s;
      }
      applied.tip_force =
          settings.damping * raw.tip_force + (1.0 - settings.damping) * applied.tip_force;
    }
  }
  throw CoupledFailure("solve_coupled: load residual " +
                           std::to_string(state.diagnostics.load_residual) +
                           " above tolerance after max_outer iterations",
                       state);
}

}  // namespace hybridkin::hybrid
