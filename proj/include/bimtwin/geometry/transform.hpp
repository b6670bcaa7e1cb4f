#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace bimtwin {

/// World-frame placement of a body: position in meters plus a unit
/// quaternion. Plain aggregate; no normalization happens on construction so
/// that copies stay bit-identical.
template <typename Scalar>
struct Pose {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Quaternion = Eigen::Quaternion<Scalar>;

  Vector3 position = Vector3::Zero();
  Quaternion orientation = Quaternion::Identity();

  static Pose Identity() { return Pose{}; }

  static Pose At(Scalar x, Scalar y, Scalar z) {
    return Pose{Vector3(x, y, z), Quaternion::Identity()};
  }

  bool operator==(const Pose& other) const {
    return position == other.position &&
           orientation.coeffs() == other.orientation.coeffs();
  }
};

/// Rigid motion mapping local coordinates to world coordinates,
/// p_world = rotation * p_local + translation. Composition reads right to
/// left: (a * b)(p) = a(b(p)).
template <typename Scalar>
class RigidTransform {
 public:
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using Quaternion = Eigen::Quaternion<Scalar>;
  using AngleAxis = Eigen::AngleAxis<Scalar>;
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;

  RigidTransform()
      : rotation_(Quaternion::Identity()), translation_(Vector3::Zero()) {}

  RigidTransform(const Quaternion& rotation, const Vector3& translation)
      : rotation_(rotation.normalized()), translation_(translation) {}

  explicit RigidTransform(const Pose<Scalar>& pose)
      : RigidTransform(pose.orientation, pose.position) {}

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform Translation(const Vector3& t) {
    return RigidTransform(Quaternion::Identity(), t);
  }
  static RigidTransform Translation(Scalar x, Scalar y, Scalar z) {
    return Translation(Vector3(x, y, z));
  }

  static RigidTransform Rotation(const Quaternion& q) {
    return RigidTransform(q, Vector3::Zero());
  }
  static RigidTransform Rotation(Scalar angle, const Vector3& axis) {
    return Rotation(Quaternion(AngleAxis(angle, axis.normalized())));
  }
  static RigidTransform RotationZ(Scalar angle) {
    return Rotation(angle, Vector3::UnitZ());
  }

  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Vector3 operator*(const Vector3& point) const {
    return rotation_ * point + translation_;
  }

  RigidTransform operator*(const RigidTransform& rhs) const {
    return RigidTransform(rotation_ * rhs.rotation_,
                          rotation_ * rhs.translation_ + translation_);
  }

  RigidTransform inverse() const {
    const Quaternion inv = rotation_.conjugate();
    return RigidTransform(inv, -(inv * translation_));
  }

  Matrix4 matrix() const {
    Matrix4 m = Matrix4::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Pose<Scalar> pose() const { return Pose<Scalar>{translation_, rotation_}; }

  /// Rotation angle in [0, pi].
  Scalar angle() const { return angular_distance(rotation_, Quaternion::Identity()); }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(),
                                 translation_.template cast<Other>());
  }

  static Scalar angular_distance(const Quaternion& a, const Quaternion& b) {
    using std::abs;
    using std::min;
    const Scalar d = min(Scalar(1), abs(a.coeffs().dot(b.coeffs())));
    return Scalar(2) * std::acos(d);
  }

 private:
  Quaternion rotation_;
  Vector3 translation_;
};

using Posed = Pose<double>;
using RigidTransformd = RigidTransform<double>;
using Vector3d = Eigen::Vector3d;
using Quaterniond = Eigen::Quaterniond;

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a,
                               const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

template <typename Scalar>
RigidTransform<Scalar> to_transform(const Pose<Scalar>& p) {
  return RigidTransform<Scalar>(p);
}

template <typename Scalar>
Pose<Scalar> to_pose(const RigidTransform<Scalar>& t) {
  return t.pose();
}

/// Pose of a child whose placement relative to `parent` is `local`.
template <typename Scalar>
Pose<Scalar> operator*(const RigidTransform<Scalar>& parent,
                       const Pose<Scalar>& local) {
  return (parent * RigidTransform<Scalar>(local)).pose();
}

template <typename Scalar>
bool is_finite(const Pose<Scalar>& p) {
  return p.position.allFinite() && p.orientation.coeffs().allFinite();
}

/// Finite with unit-norm orientation (within tol).
template <typename Scalar>
bool is_valid(const Pose<Scalar>& p, Scalar tol = Scalar(1e-9)) {
  using std::abs;
  return is_finite(p) && abs(p.orientation.norm() - Scalar(1)) <= tol;
}

template <typename Scalar>
Pose<Scalar> translated(Pose<Scalar> p,
                        const Eigen::Matrix<Scalar, 3, 1>& offset) {
  p.position += offset;
  return p;
}

/// Linear in position, spherical-linear in orientation.
template <typename Scalar>
Pose<Scalar> interpolate(const Pose<Scalar>& a, const Pose<Scalar>& b,
                         Scalar t) {
  if (t <= Scalar(0)) return a;
  if (t >= Scalar(1)) return b;
  return Pose<Scalar>{a.position + t * (b.position - a.position),
                      a.orientation.slerp(t, b.orientation).normalized()};
}

/// Translation distance and rotation angle between two transforms.
template <typename Scalar>
struct TransformDistance {
  Scalar translation;
  Scalar rotation;
};

template <typename Scalar>
TransformDistance<Scalar> distance(const RigidTransform<Scalar>& a,
                                   const RigidTransform<Scalar>& b) {
  return {(a.translation() - b.translation()).norm(),
          RigidTransform<Scalar>::angular_distance(a.rotation(), b.rotation())};
}

}  // namespace bimtwin
