#include <cmath>
#include <random>

#include "doctest.h"
#include "hybridkin/geom.hpp"
#include "hybridkin/magnetics.hpp"

using namespace hybridkin;

namespace {
constexpr double kPi = 3.14159265358979323846;
std::mt19937_64 rng(7);

Vec3 random_unit() {
  std::normal_distribution<double> g;
  Vec3 v(g(rng), g(rng), g(rng));
  return v.normalized();
}

// Calibrated N42 ball: 3.175 mm, 0.13 g, 1.32 T remanence.
const mag::BallParams kBall = mag::BallParams::from_remanence(1.32, 3.175e-3, 0.13e-3);
}  // namespace

TEST_CASE("ball moment from remanence") {
  // mu = B_r (pi d^3/6)/mu0, frozen for the calibrated ball
  CHECK(kBall.dipole_magnitude == doctest::Approx(1.760329140625e-2).epsilon(1e-12));
}

TEST_CASE("dipole field closed forms") {
  const Vec3 B_axis = mag::dipole_field(Vec3(0, 0, 0.1), Vec3(0, 0, 1));
  CHECK(B_axis.x() == doctest::Approx(0.0));
  CHECK(B_axis.y() == doctest::Approx(0.0));
  CHECK(B_axis.z() == doctest::Approx(2e-4).epsilon(1e-12));

  const Vec3 B_eq = mag::dipole_field(Vec3(0.1, 0, 0), Vec3(0, 0, 1));
  CHECK(B_eq.z() == doctest::Approx(-1e-4).epsilon(1e-12));
  CHECK(B_eq.x() == doctest::Approx(0.0));

  for (int i = 0; i < 20; ++i) {
    const Vec3 r = 0.07 * random_unit();
    const Vec3 mu = 2.0 * random_unit();
    CHECK((mag::dipole_field(-r, mu) - mag::dipole_field(r, mu)).norm() < 1e-18);
  }
  CHECK_THROWS_AS(mag::dipole_field(Vec3::Zero(), Vec3(0, 0, 1)), std::domain_error);
}

TEST_CASE("dipole field divergence and curl vanish numerically") {
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const Vec3 r = 0.05 * random_unit();
    const Vec3 mu = random_unit();
    Mat3 J;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      J.col(c) = (mag::dipole_field(r + dp, mu) - mag::dipole_field(r - dp, mu)) / (2 * h);
    }
    const double scale = mag::dipole_field(r, mu).norm() / 0.05;
    CHECK(std::abs(J.trace()) < 1e-6 * scale);
    CHECK((J - J.transpose()).norm() < 1e-6 * scale);
  }
}

TEST_CASE("dipole field gradient") {
  for (int i = 0; i < 30; ++i) {
    const Vec3 r = (0.02 + 0.001 * i) * random_unit();
    const Vec3 mu = 3.0 * random_unit();
    const Mat3 G = mag::dipole_field_gradient(r, mu);
    CHECK(std::abs(G.trace()) < 1e-10 * G.norm());
    CHECK((G - G.transpose()).norm() < 1e-10 * G.norm());
    // |r|^-4 homogeneity
    const Mat3 G2 = mag::dipole_field_gradient(2.0 * r, mu);
    CHECK((16.0 * G2 - G).norm() < 1e-10 * G.norm());
    // central finite differences, step 1e-6 m
    Mat3 J;
    const double h = 1e-6;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      J.col(c) = (mag::dipole_field(r + dp, mu) - mag::dipole_field(r - dp, mu)) / (2 * h);
    }
    CHECK((G - J).norm() < 1e-6 * G.norm());
  }
  CHECK_THROWS_AS(mag::dipole_field_gradient(Vec3::Zero(), Vec3(0, 0, 1)), std::domain_error);
}

TEST_CASE("magnetic force") {
  CHECK(mag::magnetic_force(Vec3(1, 2, 3), Mat3::Zero()).norm() == 0.0);

  // Two co-aligned touching dipoles attract: force on the nearer ball points
  // toward the other. Sign oracle: U(d) = -mu0 mu^2/(2 pi d^3) decreases as
  // d shrinks.
  const double d = kBall.diameter;
  const double mu = kBall.dipole_magnitude;
  const Vec3 p_i(0, 0, 0), p_j(0, 0, d);
  const Vec3 m = mu * Vec3::UnitZ();
  const Vec3 f_i = mag::magnetic_force(m, mag::dipole_field_gradient(p_i - p_j, m));
  CHECK(f_i.dot(p_j - p_i) > 0.0);

  // f_ij = -f_ji for random pairs (differentiate the pair energy at both ends)
  for (int rep = 0; rep < 30; ++rep) {
    const Vec3 pi = 0.01 * random_unit();
    const Vec3 pj = pi + (0.005 + 0.01 * rep / 30.0) * random_unit();
    const Vec3 mi = mu * random_unit();
    const Vec3 mj = mu * random_unit();
    const Vec3 fij = mag::magnetic_force(mi, mag::dipole_field_gradient(pi - pj, mj));
    const Vec3 fji = mag::magnetic_force(mj, mag::dipole_field_gradient(pj - pi, mi));
    CHECK((fij + fji).norm() < 1e-12 * std::max(fij.norm(), 1e-30));
  }
}

TEST_CASE("magnetic force equals -dU/dp by finite differences") {
  const double mu = kBall.dipole_magnitude;
  const double h = 1e-8;
  for (int rep = 0; rep < 30; ++rep) {
    const Vec3 pj = Vec3::Zero();
    const Vec3 pi = (0.004 + 0.01 * rep / 30.0) * random_unit();
    const Vec3 mi = mu * random_unit();
    const Vec3 mj = mu * random_unit();
    const Vec3 f = mag::magnetic_force(mi, mag::dipole_field_gradient(pi - pj, mj));
    Vec3 f_fd;
    for (int c = 0; c < 3; ++c) {
      Vec3 dp = Vec3::Zero();
      dp[c] = h;
      const double up = -mi.dot(mag::dipole_field(pi + dp - pj, mj));
      const double um = -mi.dot(mag::dipole_field(pi - dp - pj, mj));
      f_fd[c] = -(up - um) / (2 * h);
    }
    CHECK((f - f_fd).norm() < 1e-5 * f.norm());
  }
}

TEST_CASE("magnetic torque") {
  CHECK(mag::magnetic_torque(Vec3(0, 0, 2), Vec3(0, 0, 5)).norm() == 0.0);
  const Vec3 t = mag::magnetic_torque(Vec3(2, 0, 0), Vec3(0, 3, 0));
  CHECK((t - Vec3(0, 0, 6)).norm() < 1e-15);
  for (int i = 0; i < 20; ++i) {
    const Vec3 m = 2.0 * random_unit(), B = 0.5 * random_unit();
    CHECK(mag::magnetic_torque(m, B).norm() <= m.norm() * B.norm() + 1e-15);
  }
}

TEST_CASE("chain energy: single ball in aligned uniform field") {
  mag::ChainConfig c;
  c.positions = {Vec3(0.01, 0.02, 0.03)};
  c.dipoles = {kBall.dipole_magnitude * Vec3::UnitY()};
  const mag::FieldSource src = mag::UniformField{0.03 * Vec3::UnitY()};
  const auto e = mag::chain_energy(c, src, kBall, Vec3::Zero());
  CHECK(e.U_e == doctest::Approx(-kBall.dipole_magnitude * 0.03).epsilon(1e-14));
  CHECK(e.U_b == 0.0);
  CHECK(e.U_g == 0.0);
  CHECK(e.U_total == doctest::Approx(e.U_e));
}

TEST_CASE("chain energy: touching co-aligned pair closed form") {
  // U_b = -mu0 mu^2 / (2 pi d^3); value computed from the formula with the
  // calibrated ball (d = 3.175e-3 m, B_r = 1.32 T).
  const double expected = -1.9363620546874998e-3;
  const double d = kBall.diameter;
  mag::ChainConfig c;
  c.positions = {Vec3::Zero(), Vec3(0, 0, d)};
  c.dipoles = {kBall.dipole_magnitude * Vec3::UnitZ(), kBall.dipole_magnitude * Vec3::UnitZ()};
  const auto e = mag::chain_energy(c, mag::UniformField{}, kBall, Vec3::Zero());
  CHECK(e.U_b == doctest::Approx(expected).epsilon(1e-12));
  const double formula =
      -mag::kMu0 * kBall.dipole_magnitude * kBall.dipole_magnitude / (2.0 * kPi * d * d * d);
  CHECK(e.U_b == doctest::Approx(formula).epsilon(1e-14));
}

TEST_CASE("chain energy invariances") {
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  mag::ChainConfig c;
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 5; ++i) {
    c.positions.push_back(p);
    c.dipoles.push_back(kBall.dipole_magnitude * random_unit());
    p += kBall.diameter * (Vec3::UnitZ() + 0.3 * random_unit()).normalized();
  }
  const mag::FieldSource uniform = mag::UniformField{0.02 * random_unit()};

  SUBCASE("translation invariance under uniform source, zero gravity") {
    const auto e0 = mag::chain_energy(c, uniform, kBall, Vec3::Zero());
    mag::ChainConfig moved = c;
    const Vec3 shift(0.4, -0.1, 0.25);
    for (auto& q : moved.positions) q += shift;
    const auto e1 = mag::chain_energy(moved, uniform, kBall, Vec3::Zero());
    CHECK(e1.U_total == doctest::Approx(e0.U_total).epsilon(1e-12));
  }

  SUBCASE("U_b invariant under global rotation") {
    const auto e0 = mag::chain_energy(c, mag::UniformField{}, kBall, Vec3::Zero());
    const Mat3 R = geom::exp_so3(Vec3(0.3, -1.1, 0.7));
    mag::ChainConfig rotated = c;
    for (auto& q : rotated.positions) q = R * q;
    for (auto& m : rotated.dipoles) m = R * m;
    const auto e1 = mag::chain_energy(rotated, mag::UniformField{}, kBall, Vec3::Zero());
    CHECK(e1.U_b == doctest::Approx(e0.U_b).epsilon(1e-10));
  }

  SUBCASE("sum identity") {
    const auto e = mag::chain_energy(c, uniform, kBall, Vec3(-9.81, 0, 0), 1e-6, 3);
    CHECK(e.U_total ==
          doctest::Approx(e.U_e + e.U_b + e.U_g + e.U_s).epsilon(1e-12));
  }

  SUBCASE("coincident centers rejected") {
    mag::ChainConfig bad = c;
    bad.positions[1] = bad.positions[0];
    CHECK_THROWS_AS(mag::chain_energy(bad, uniform, kBall, Vec3::Zero()), std::domain_error);
  }
}

TEST_CASE("chain bend angles") {
  mag::ChainConfig c;
  const double d = kBall.diameter;
  c.positions = {Vec3(0, 0, 0), Vec3(0, 0, d), Vec3(0, 0, 2 * d), Vec3(0, d, 2 * d)};
  c.dipoles.assign(4, Vec3::Zero());
  const auto th = c.bend_angles();
  REQUIRE(th.size() == 2);
  CHECK(th[0] == doctest::Approx(0.0));
  CHECK(th[1] == doctest::Approx(kPi / 2));
}

TEST_CASE("gravitational energy sign: higher along -g is higher energy") {
  // g = (-9.81, 0, 0): +x is up, so U_g grows with +x.
  mag::ChainConfig lo, hi;
  lo.positions = {Vec3::Zero()};
  hi.positions = {Vec3(0.1, 0, 0)};
  lo.dipoles = hi.dipoles = {Vec3::Zero()};
  mag::BallParams b = kBall;
  const Vec3 g(-9.81, 0, 0);
  CHECK(mag::chain_energy(hi, mag::UniformField{}, b, g).U_g >
        mag::chain_energy(lo, mag::UniformField{}, b, g).U_g);
}
