#include "hybridkin/geom.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridkin::geom {

Mat3 skew(const Vec3& u) {
  Mat3 S;
  S << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
      -u.y(), u.x(), 0.0;
  return S;
}

Vec3 unskew(const Mat3& S) {
  return 0.5 * Vec3(S(2, 1) - S(1, 2), S(0, 2) - S(2, 0), S(1, 0) - S(0, 1));
}

Mat3 exp_so3(const Vec3& omega) {
  const double t2 = omega.squaredNorm();
  const double t = std::sqrt(t2);
  double a, b;  // sin(t)/t and (1-cos t)/t^2
  if (t < 1e-6) {
    a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0);
    b = 0.5 - t2 / 24.0 * (1.0 - t2 / 30.0);
  } else {
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  const Mat3 S = skew(omega);
  return Mat3::Identity() + a * S + b * (S * S);
}

Mat3 rot_about_axis(int axis_index, double angle) {
  if (axis_index < 1 || axis_index > 3) {
    throw std::invalid_argument("rot_about_axis: axis_index must be 1, 2 or 3");
  }
  Vec3 axis = Vec3::Zero();
  axis[axis_index - 1] = angle;
  return exp_so3(axis);
}

Cylindrical to_cylindrical(const Vec3& p) {
  const double r = std::hypot(p.x(), p.y());
  const double phi = (r == 0.0) ? 0.0 : std::atan2(p.y(), p.x());
  return {r, phi, p.z()};
}

bool is_rotation(const Mat3& R, double tol) {
  const double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  return ortho < tol && std::abs(R.determinant() - 1.0) < tol;
}

Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 h = (std::abs(v.x()) < 0.9 * v.norm()) ? Vec3::UnitX() : Vec3::UnitY();
  return h.cross(v).normalized();
}

}  // namespace hybridkin::geom
