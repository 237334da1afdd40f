#pragma once

#include <cmath>

#include "spnkit/error.hpp"
#include "spnkit/vec.hpp"

namespace spnkit {

/// Unit quaternion, Hamilton convention, scalar part first in all file
/// formats and constructors. q and -q describe the same rotation; nothing
/// here forces a canonical sign.
class UnitQuaternion {
 public:
  /// Identity rotation.
  UnitQuaternion() : w_(1.0), x_(0.0), y_(0.0), z_(0.0) {}

  /// Normalizes the given components. Components whose squared norm is
  /// already within 1e-12 of one are stored untouched, which keeps
  /// write/read round-trips bit-exact (rounding drift from arithmetic and
  /// text formatting stays orders of magnitude below that threshold).
  /// Throws InvalidInput for non-finite input or a norm too small to
  /// normalize meaningfully.
  UnitQuaternion(double w, double x, double y, double z) : w_(w), x_(x), y_(y), z_(z) {
    if (!std::isfinite(w) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw InvalidInput("quaternion components must be finite");
    const double n2 = w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_;
    if (n2 < 1e-24) throw InvalidInput("quaternion norm too small");
    if (std::abs(n2 - 1.0) > 1e-12) {
      const double n = std::sqrt(n2);
      w_ /= n;
      x_ /= n;
      y_ /= n;
      z_ /= n;
    }
  }

  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad) {
    const Vec3 u = axis.normalized();
    const double h = 0.5 * angle_rad;
    const double s = std::sin(h);
    return UnitQuaternion(std::cos(h), s * u.x, s * u.y, s * u.z);
  }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  UnitQuaternion conjugate() const { return UnitQuaternion(w_, -x_, -y_, -z_); }
  UnitQuaternion negated() const { return UnitQuaternion(-w_, -x_, -y_, -z_); }

  double dot(const UnitQuaternion& o) const {
    return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_;
  }

  /// Rotation angle in [0, pi].
  double angle() const {
    return 2.0 * std::atan2(std::sqrt(x_ * x_ + y_ * y_ + z_ * z_), std::abs(w_));
  }

 private:
  double w_, x_, y_, z_;
};

/// Hamilton product q1 * q2, renormalized. Satisfies
/// to_rotation_matrix(compose(q1, q2)) = to_rotation_matrix(q1) * to_rotation_matrix(q2).
/// Each vector component sums its symmetric pair first, so composing q with
/// its own conjugate (or its negation's conjugate) cancels exactly and the
/// angular distance of a quaternion to itself comes out as exactly zero.
inline UnitQuaternion compose(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  return UnitQuaternion(
      q1.w() * q2.w() - q1.x() * q2.x() - q1.y() * q2.y() - q1.z() * q2.z(),
      q1.w() * q2.x() + q1.x() * q2.w() + q1.y() * q2.z() - q1.z() * q2.y(),
      q1.w() * q2.y() + q1.y() * q2.w() + q1.z() * q2.x() - q1.x() * q2.z(),
      q1.w() * q2.z() + q1.z() * q2.w() + q1.x() * q2.y() - q1.y() * q2.x());
}

/// 3x3 rotation matrix. Construction verifies orthonormality and unit
/// determinant to 1e-9.
class RotationMatrix {
 public:
  explicit RotationMatrix(const Mat3& m) : m_(m) {
    const Mat3 g = m_.transposed() * m_;
    const Mat3 eye = Mat3::identity();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(g(i, j) - eye(i, j)) > 1e-9)
          throw InvalidInput("matrix is not orthonormal");
    if (std::abs(m_.det() - 1.0) > 1e-9) throw InvalidInput("matrix determinant is not 1");
  }

  const Mat3& mat() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  Mat3 m_;
};

/// Same matrix for q and -q.
inline RotationMatrix to_rotation_matrix(const UnitQuaternion& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Mat3 m;
  m.a = {1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z),       2.0 * (x * z + w * y),
         2.0 * (x * y + w * z),       1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
         2.0 * (x * z - w * y),       2.0 * (y * z + w * x),       1.0 - 2.0 * (x * x + y * y)};
  return RotationMatrix(m);
}

/// Geodesic distance 2*acos(|scalar part of q1 * conj(q2)|), in [0, pi].
/// Symmetric and invariant to the sign of either argument. Evaluated in the
/// equivalent atan2 form, which keeps full precision near zero where acos
/// loses half the significant digits; identical arguments (up to sign) give
/// exactly zero because the relative rotation's vector part cancels term by
/// term.
inline double angular_distance(const UnitQuaternion& q1, const UnitQuaternion& q2) {
  const UnitQuaternion z = compose(q1, q2.conjugate());
  const double vec_norm = std::sqrt(z.x() * z.x() + z.y() * z.y() + z.z() * z.z());
  return 2.0 * std::atan2(vec_norm, std::abs(z.w()));
}

/// Six-DOF state of the target body frame relative to the camera frame:
/// camera-frame point of a body-frame point X is R(q) * X + t.
struct Pose {
  UnitQuaternion q;     // relative attitude
  Vec3 t{0.0, 0.0, 0.0};  // relative position, meters; t.z > 0 for visible targets

  Pose() = default;
  Pose(const UnitQuaternion& q_, const Vec3& t_) : q(q_), t(t_) {
    if (!t.finite()) throw InvalidInput("pose translation must be finite");
  }
};

}  // namespace spnkit
