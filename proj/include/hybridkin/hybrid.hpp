#pragma once

#include <stdexcept>
#include <vector>

#include "hybridkin/chain.hpp"
#include "hybridkin/cosserat.hpp"
#include "hybridkin/magnetics.hpp"

namespace hybridkin::hybrid {

struct ActuationInput {
  double tension = 0.0;    // lambda [N]
  double base_roll = 0.0;  // phi [rad], applied about the base e3
  mag::FieldSource source = mag::UniformField{};
  Vec3 gravity{Vec3::Zero()};  // [m/s^2]
  int extended = 0;            // n_e
};

struct SolverSettings {
  double load_tolerance = 1e-4;  // epsilon on the outer load change [N]
  int max_outer = 20;
  int rod_steps = 200;
  double damping = 0.5;  // alpha in (0, 1] on applied-load updates
  chain::MinimizeSettings chain;
  rod::ShootingSettings shooting;
};

struct Diagnostics {
  int iterations = 0;
  double load_residual = 0.0;  // max-norm change of the chain-load vector [N]
  bool converged = false;
  double rod_residual = 0.0;
  double chain_energy = 0.0;
  double chain_gradient_norm = 0.0;
};

struct HybridShape {
  rod::RodShape rod;
  chain::ChainConfig chain;
  Diagnostics diagnostics;
};

struct CoupledFailure : std::runtime_error {
  CoupledFailure(const std::string& what, HybridShape last)
      : std::runtime_error(what), last(std::move(last)) {}
  HybridShape last;
};

/// Loads the chain applies to the tube: one cross-sectional point force per
/// internal ball at s_i = l_t - (n - n_e - i) d_c (projection of magnetic
/// force + gravity, plus the torque-derived transverse term tau_i x t / d_c)
/// and the projected resultant over the extended balls as a tip force.
struct ChainLoads {
  std::vector<rod::PointLoad> point_loads;
  Vec3 tip_force{Vec3::Zero()};
};
ChainLoads chain_loads_on_tube(const rod::RodShape& rod, const chain::ChainConfig& chain,
                               const chain::ChainParams& params, const mag::FieldSource& src,
                               const Vec3& gravity);

/// Single-pass model: tube solved ignoring magnetic loads, then the chain
/// minimized with the internal balls frozen on the rod centerline.
HybridShape solve_decoupled(const rod::TubeParams& tube, const chain::ChainParams& chainp,
                            const ActuationInput& input, const SolverSettings& settings = {});

/// Fixed-point iteration alternating the rod BVP under the current chain
/// loads with chain re-initialization and minimization; applied loads are
/// blended with factor `damping`. Terminates when the max-norm change of
/// the raw chain-load vector between outer iterations drops below the load
/// tolerance. Throws CoupledFailure (last iterate attached) on exhaustion.
HybridShape solve_coupled(const rod::TubeParams& tube, const chain::ChainParams& chainp,
                          const ActuationInput& input, const SolverSettings& settings = {});

}  // namespace hybridkin::hybrid
