#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "hybridkin/cosserat.hpp"
#include "hybridkin/geom.hpp"
#include "hybridkin/magnetics.hpp"

namespace hybridkin::chain {

using mag::ChainConfig;

struct ChainParams {
  mag::BallParams ball;
  int count = 10;        // n
  int extended = 4;      // n_e
  double sleeve_EI = 0;  // [N*m^2]

  void validate() const;
};

/// Balls 0..fixed_count-1 are frozen (position and dipole) at the poses
/// taken from the tube solution. When fixed_count == 0 the first ball's
/// position is pinned at `anchor` and its dipole frozen along
/// `anchor_tangent` (the glued base ball).
struct ChainConstraints {
  int fixed_count = 0;
  std::vector<Vec3> fixed_positions;
  std::vector<Vec3> fixed_dipoles;
  Vec3 anchor{Vec3::Zero()};
  Vec3 anchor_tangent{Vec3::UnitZ()};
};

/// Largest violation of the contact (absolute, [m]) and dipole-magnitude
/// (relative) invariants.
double constraint_residual(const ChainConfig& config, const ChainParams& params);

/// Initial chain configuration on a solved rod: internal balls resampled
/// backwards from the tube tip at exact chord spacing d_c, extended balls
/// continuing straight along the tip tangent, dipoles along local tangents.
/// Throws std::invalid_argument when the rod is too short for n - n_e balls.
ChainConfig init_chain_guess(const rod::RodShape& rod, const ChainParams& params);

/// Constraints matching init_chain_guess output (internal part frozen).
ChainConstraints constraints_from_guess(const ChainConfig& guess, const ChainParams& params);

struct MinimizeSettings {
  double tolerance = 1e-8;  // projected-gradient norm [J/rad]
  int max_iterations = 2000;
  bool fd_gradient = false;       // finite-difference fallback for gradients
  bool multistart = true;         // 3 deterministic restarts (guess, +/-30 deg)
  double restart_angle = 0.5235987755982988;  // 30 deg
};

struct MinimizeResult {
  ChainConfig config;
  double energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};

struct MinimizeFailure : std::runtime_error {
  MinimizeFailure(const std::string& what, MinimizeResult best)
      : std::runtime_error(what), best(std::move(best)) {}
  MinimizeResult best;
};

/// Constrained energy minimization with constraints eliminated by
/// parameterization: per free ball two spherical angles for the contact
/// offset direction and two for the unit dipole (first ball's dipole frozen
/// along its local tangent). Quasi-Newton with backtracking line search on
/// the tangent-space coordinates, re-anchored every accepted step.
/// Throws MinimizeFailure when no restart reaches the gradient tolerance.
MinimizeResult minimize_energy(const ChainConfig& guess, const ChainConstraints& constraints,
                               const mag::FieldSource& src, const Vec3& gravity,
                               const ChainParams& params, const MinimizeSettings& settings = {});

/// Number of tangent-space coordinates of the free angles for a chain of
/// params.count balls under the given constraints.
int free_coordinate_count(const ChainConstraints& constraints, const ChainParams& params);

/// Retraction: apply a tangent-space displacement to the free directions of
/// `config` (frames derived deterministically from the current directions;
/// link coordinate pairs first, then dipole pairs). Used by the
/// finite-difference gradient oracle.
ChainConfig retract(const ChainConfig& config, const ChainConstraints& constraints,
                    const ChainParams& params, const Eigen::VectorXd& dx);

/// Energy and its analytic gradient with respect to the tangent-space
/// coordinates at the given configuration (chain rule through the dipole
/// field/force primitives). Exposed for gradient verification.
std::pair<double, Eigen::VectorXd> energy_and_gradient(const ChainConfig& config,
                                                       const ChainConstraints& constraints,
                                                       const mag::FieldSource& src,
                                                       const Vec3& gravity,
                                                       const ChainParams& params);

/// Exhaustive grid search oracle over the free angles at the given angular
/// resolution. With aligned_dipoles (default) each free dipole is slaved to
/// its link direction, halving the grid dimension. Free balls must number
/// <= 2; throws std::invalid_argument otherwise.
ChainConfig brute_force_min(const ChainConfig& guess, const ChainConstraints& constraints,
                            const mag::FieldSource& src, const Vec3& gravity,
                            const ChainParams& params, double resolution,
                            bool aligned_dipoles = true);

}  // namespace hybridkin::chain
