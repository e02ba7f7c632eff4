#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace artic {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rotation followed by translation; lengths in millimeters.
struct RigidTransform
{
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  /// (*this ∘ rhs)(p) == apply(rhs.apply(p)); the rotation is renormalized.
  RigidTransform operator*(const RigidTransform& rhs) const
  {
    RigidTransform out;
    out.rotation = (rotation * rhs.rotation).normalized();
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  RigidTransform inverse() const
  {
    RigidTransform out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }

  bool operator==(const RigidTransform& o) const
  {
    return rotation.coeffs() == o.rotation.coeffs() && translation == o.translation;
  }
};

/// Rotation vector (axis * angle, radians) to unit quaternion.
inline Quat quat_exp(const Vec3& rotvec)
{
  const double angle = rotvec.norm();
  if (angle < 1e-300) {
    return Quat::Identity();
  }
  return Quat(Eigen::AngleAxisd(angle, rotvec / angle));
}

/// Unit quaternion to rotation vector with angle in [0, pi].
inline Vec3 quat_log(const Quat& q)
{
  Quat u = q.normalized();
  if (u.w() < 0.0) {
    u.coeffs() = -u.coeffs();
  }
  const double s = u.vec().norm();
  if (s < 1e-300) {
    return Vec3::Zero();
  }
  const double angle = 2.0 * std::atan2(s, u.w());
  return u.vec() * (angle / s);
}

/// Angle of the rotation represented by q, in [0, pi].
inline double rotation_angle(const Quat& q) { return quat_log(q).norm(); }

/// Spherical linear interpolation between unit axes. Antipodal axes fall back
/// to normalized lerp.
inline Vec3 slerp_axis(const Vec3& a, const Vec3& b, double t)
{
  const double cos_omega = std::clamp(a.dot(b), -1.0, 1.0);
  const double omega = std::acos(cos_omega);
  const double sin_omega = std::sin(omega);
  if (sin_omega < 1e-12) {
    Vec3 v = (1.0 - t) * a + t * b;
    const double n = v.norm();
    return n > 0.0 ? Vec3(v / n) : a;
  }
  Vec3 v = (std::sin((1.0 - t) * omega) / sin_omega) * a + (std::sin(t * omega) / sin_omega) * b;
  return v.normalized();
}

}  // namespace artic
