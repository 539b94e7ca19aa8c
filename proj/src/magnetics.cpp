#include "hybridkin/magnetics.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridkin::mag {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSingularRadius = 1e-12;  // [m]
}  // namespace

double BallParams::moment_from_remanence(double remanence, double diameter) {
  const double volume = kPi * diameter * diameter * diameter / 6.0;
  return remanence * volume / kMu0;
}

BallParams BallParams::from_remanence(double remanence, double diameter, double mass) {
  BallParams p;
  p.diameter = diameter;
  p.mass = mass;
  p.remanence = remanence;
  p.dipole_magnitude = moment_from_remanence(remanence, diameter);
  return p;
}

std::vector<double> ChainConfig::bend_angles() const {
  std::vector<double> out;
  for (size_t i = 1; i + 1 < positions.size(); ++i) {
    const Vec3 a = (positions[i] - positions[i - 1]).normalized();
    const Vec3 b = (positions[i + 1] - positions[i]).normalized();
    out.push_back(std::atan2(a.cross(b).norm(), a.dot(b)));
  }
  return out;
}

Vec3 dipole_field(const Vec3& r, const Vec3& moment) {
  const double dist = r.norm();
  if (dist < kSingularRadius) {
    throw std::domain_error("dipole_field: evaluation point at the dipole origin");
  }
  const Vec3 rhat = r / dist;
  const double c = kMu0 / (4.0 * kPi * dist * dist * dist);
  return c * (3.0 * rhat * rhat.dot(moment) - moment);
}

Mat3 dipole_field_gradient(const Vec3& r, const Vec3& moment) {
  const double dist = r.norm();
  if (dist < kSingularRadius) {
    throw std::domain_error("dipole_field_gradient: evaluation point at the dipole origin");
  }
  const Vec3 rhat = r / dist;
  const double rm = rhat.dot(moment);
  const double c = 3.0 * kMu0 / (4.0 * kPi * std::pow(dist, 4));
  // dB_i/dr_j = c [ delta_ij (r^.mu) + r^_i mu_j + mu_i r^_j - 5 (r^.mu) r^_i r^_j ]
  return c * (rm * Mat3::Identity() + rhat * moment.transpose() +
              moment * rhat.transpose() - 5.0 * rm * rhat * rhat.transpose());
}

Vec3 magnetic_force(const Vec3& moment, const Mat3& grad_B) {
  return grad_B.transpose() * moment;
}

Vec3 magnetic_torque(const Vec3& moment, const Vec3& field) {
  return moment.cross(field);
}

Vec3 source_field(const FieldSource& src, const Vec3& position) {
  if (const auto* u = std::get_if<UniformField>(&src)) {
    return u->field;
  }
  const auto& d = std::get<Dipole>(src);
  return dipole_field(position - d.position, d.moment);
}

Mat3 source_field_gradient(const FieldSource& src, const Vec3& position) {
  if (std::holds_alternative<UniformField>(src)) {
    return Mat3::Zero();
  }
  const auto& d = std::get<Dipole>(src);
  return dipole_field_gradient(position - d.position, d.moment);
}

EnergyBreakdown chain_energy(const ChainConfig& chain, const FieldSource& src,
                             const BallParams& ball, const Vec3& gravity,
                             double sleeve_EI, int extended) {
  const int n = chain.size();
  if (static_cast<int>(chain.dipoles.size()) != n) {
    throw std::invalid_argument("chain_energy: positions/dipoles size mismatch");
  }
  EnergyBreakdown e;
  for (int i = 0; i < n; ++i) {
    e.U_e -= chain.dipoles[i].dot(source_field(src, chain.positions[i]));
    e.U_g -= ball.mass * gravity.dot(chain.positions[i]);
    for (int j = i + 1; j < n; ++j) {
      const Vec3 r = chain.positions[i] - chain.positions[j];
      if (r.norm() < kSingularRadius) {
        throw std::domain_error("chain_energy: coincident ball centers");
      }
      e.U_b -= chain.dipoles[i].dot(dipole_field(r, chain.dipoles[j]));
    }
  }
  if (sleeve_EI != 0.0 && extended > 0) {
    // Bend angles at interior extended balls i in [n-extended, n-2] (0-based),
    // between links (i-1 -> i) and (i -> i+1).
    const int first = std::max(n - extended, 1);
    for (int i = first; i + 1 < n; ++i) {
      const Vec3 a = (chain.positions[i] - chain.positions[i - 1]).normalized();
      const Vec3 b = (chain.positions[i + 1] - chain.positions[i]).normalized();
      const double theta = std::atan2(a.cross(b).norm(), a.dot(b));
      e.U_s += 0.5 * sleeve_EI * theta * theta / ball.diameter;
    }
  }
  e.U_total = e.U_e + e.U_b + e.U_g + e.U_s;
  return e;
}

}  // namespace hybridkin::mag
