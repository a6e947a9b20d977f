#pragma once

#include <Eigen/Dense>

namespace spinsim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Unit quaternion stored scalar-last, q = [q_v; q_o].
///
/// Rotation convention is active: rotmat(q) rotates vectors by the angle
/// 2*acos(q_o) about q_v, and rotmat(p * q) = rotmat(p) * rotmat(q).
/// When q describes the attitude of frame F relative to frame P, rotmat(q)
/// maps F-coordinates into P-coordinates.
class Quaternion {
 public:
  Quaternion() : vec_(Vec3::Zero()), scalar_(1.0) {}
  Quaternion(const Vec3& vec, double scalar) : vec_(vec), scalar_(scalar) {}

  static Quaternion identity() { return {}; }
  static Quaternion from_coeffs(const Vec4& c) { return {c.head<3>(), c[3]}; }
  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  /// Closest unit quaternion for an orthonormal matrix; canonical (q_o >= 0).
  static Quaternion from_rotation(const Mat3& rotation);

  const Vec3& vec() const { return vec_; }
  double scalar() const { return scalar_; }
  Vec4 coeffs() const;

  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {-vec_, scalar_}; }
  /// Same rotation with the sign chosen so that q_o >= 0.
  Quaternion canonical() const;

  /// Hamilton product.
  Quaternion operator*(const Quaternion& rhs) const;
  Quaternion operator-() const { return {-vec_, -scalar_}; }

  /// Rotation angle in [0, pi] of the represented attitude.
  double angle() const;

 private:
  Vec3 vec_;
  double scalar_;
};

/// Matrix form of the cross product: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/// A(q) = I + 2 q_o [q_v x] + 2 [q_v x]^2.  Throws InvalidQuaternion when
/// |‖q‖ - 1| exceeds 1e-9.
Mat3 quat_to_rotmat(const Quaternion& q);

/// Omega(w) = [[-[w x], w], [-w^T, 0]] acting on [q_v; q_o].
Mat4 omega_matrix(const Vec3& w);

/// dq/dt = 1/2 Omega(w) q for w expressed in the frame q describes.
Vec4 quat_derivative(const Quaternion& q, const Vec3& w);

/// Attitude of the base frame relative to the target frame, canonicalized
/// to q_o >= 0.  With A = quat_to_rotmat(result), A maps base coordinates
/// into target coordinates and A^T maps target coordinates into base
/// coordinates.  Its rate obeys dq/dt = 1/2 Omega(w_b - A^T w_s) q.
Quaternion quat_error(const Quaternion& q_target, const Quaternion& q_base);

}  // namespace spinsim
