#include "spinsim/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spinsim/error.hpp"

namespace spinsim {

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) {
    return identity();
  }
  return {axis / n * std::sin(0.5 * angle), std::cos(0.5 * angle)};
}

Quaternion Quaternion::from_rotation(const Mat3& rotation) {
  const Eigen::Quaterniond e(rotation);
  return Quaternion(Vec3(e.x(), e.y(), e.z()), e.w()).normalized().canonical();
}

Vec4 Quaternion::coeffs() const {
  Vec4 c;
  c << vec_, scalar_;
  return c;
}

double Quaternion::norm() const { return std::sqrt(vec_.squaredNorm() + scalar_ * scalar_); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {vec_ / n, scalar_ / n};
}

Quaternion Quaternion::canonical() const { return scalar_ < 0.0 ? -*this : *this; }

Quaternion Quaternion::operator*(const Quaternion& rhs) const {
  return {scalar_ * rhs.vec_ + rhs.scalar_ * vec_ + vec_.cross(rhs.vec_),
          scalar_ * rhs.scalar_ - vec_.dot(rhs.vec_)};
}

double Quaternion::angle() const {
  return 2.0 * std::atan2(vec_.norm(), std::abs(scalar_));
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 quat_to_rotmat(const Quaternion& q) {
  const double n = q.norm();
  if (!(std::abs(n - 1.0) <= 1e-9)) {
    std::ostringstream os;
    os << "quaternion norm " << n << " deviates from 1 by more than 1e-9";
    throw InvalidQuaternion(os.str());
  }
  const Mat3 s = skew(q.vec());
  return Mat3::Identity() + 2.0 * q.scalar() * s + 2.0 * s * s;
}

Mat4 omega_matrix(const Vec3& w) {
  Mat4 m;
  m.topLeftCorner<3, 3>() = -skew(w);
  m.topRightCorner<3, 1>() = w;
  m.bottomLeftCorner<1, 3>() = -w.transpose();
  m(3, 3) = 0.0;
  return m;
}

Vec4 quat_derivative(const Quaternion& q, const Vec3& w) {
  return 0.5 * omega_matrix(w) * q.coeffs();
}

Quaternion quat_error(const Quaternion& q_target, const Quaternion& q_base) {
  return (q_target.conjugate() * q_base).canonical();
}

}  // namespace spinsim
