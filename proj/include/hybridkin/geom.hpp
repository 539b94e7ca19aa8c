#pragma once

#include <Eigen/Dense>

namespace hybridkin {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

namespace geom {

/// Rigid body pose: position [m] and orientation (rotation matrix).
struct Pose {
  Vec3 position{Vec3::Zero()};
  Mat3 orientation{Mat3::Identity()};
};

/// Skew-symmetric matrix of u, skew(u)*w == u x w.
Mat3 skew(const Vec3& u);

/// Inverse of skew (takes the antisymmetric part if the input is not exact).
Vec3 unskew(const Mat3& S);

/// Rotation matrix exp([omega]x): Rodrigues rotation about omega/|omega| by
/// angle |omega|. Uses series expansions of sin(t)/t and (1-cos t)/t^2 below
/// t = 1e-6 so the identity limit is exact.
Mat3 exp_so3(const Vec3& omega);

/// Principal-axis rotation; axis_index in {1,2,3} selects e1/e2/e3.
Mat3 rot_about_axis(int axis_index, double angle);

struct Cylindrical {
  double r;    // radial distance [m]
  double phi;  // azimuth, atan2 convention, (-pi, pi]; 0 when r == 0
  double z;    // [m]
};

Cylindrical to_cylindrical(const Vec3& p);

/// True when R^T R = I within tol and det(R) = +1 within tol.
bool is_rotation(const Mat3& R, double tol = 1e-10);

/// Deterministic unit vector orthogonal to the given (non-zero) direction.
Vec3 any_orthogonal(const Vec3& v);

}  // namespace geom
}  // namespace hybridkin
