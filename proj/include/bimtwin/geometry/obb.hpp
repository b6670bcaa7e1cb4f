#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "bimtwin/geometry/transform.hpp"

namespace bimtwin {

/// Oriented bounding box: a cuboid with half extents along the axes of its
/// center pose.
template <typename Scalar>
class Obb {
 public:
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Obb(const Pose<Scalar>& center_pose, const Vector3& half_extents)
      : center_pose_(center_pose), half_extents_(half_extents) {
    if (!(half_extents_.array() > Scalar(0)).all() ||
        !half_extents_.allFinite()) {
      throw std::invalid_argument("Obb half extents must be positive");
    }
    if (!is_finite(center_pose_)) {
      throw std::invalid_argument("Obb center pose must be finite");
    }
    center_pose_.orientation.normalize();
  }

  /// Axis-aligned box centered at `center`.
  static Obb Box(const Vector3& center, const Vector3& half_extents) {
    return Obb(Pose<Scalar>{center, Eigen::Quaternion<Scalar>::Identity()},
               half_extents);
  }

  const Pose<Scalar>& center_pose() const { return center_pose_; }
  const Vector3& half_extents() const { return half_extents_; }
  const Vector3& center() const { return center_pose_.position; }

  Scalar volume() const { return Scalar(8) * half_extents_.prod(); }

  /// Radius of the bounding sphere around the box center.
  Scalar radius() const { return half_extents_.norm(); }

  /// This box expressed in the parent frame of `X` (X maps the box's frame
  /// to the parent frame).
  Obb transformed(const RigidTransform<Scalar>& X) const {
    return Obb(X * center_pose_, half_extents_);
  }

  Obb inflated(Scalar margin) const {
    return Obb(center_pose_, half_extents_.array() + margin);
  }

  /// World-axis half extents of the enclosing axis-aligned box.
  Vector3 aabb_half_extents() const {
    return center_pose_.orientation.toRotationMatrix().cwiseAbs() *
           half_extents_;
  }

  std::array<Vector3, 8> vertices() const {
    std::array<Vector3, 8> out;
    const auto R = center_pose_.orientation.toRotationMatrix();
    for (int i = 0; i < 8; ++i) {
      const Vector3 s((i & 1) ? 1 : -1, (i & 2) ? 1 : -1, (i & 4) ? 1 : -1);
      out[i] = center() + R * s.cwiseProduct(half_extents_);
    }
    return out;
  }

  /// Closed interval of the box projected on a unit axis.
  std::pair<Scalar, Scalar> project(const Vector3& axis) const {
    const Scalar c = center().dot(axis);
    const Scalar r =
        (center_pose_.orientation.toRotationMatrix().transpose() * axis)
            .cwiseAbs()
            .dot(half_extents_);
    return {c - r, c + r};
  }

 private:
  Pose<Scalar> center_pose_;
  Vector3 half_extents_;
};

using Obbd = Obb<double>;

/// Separating-axis test over the 15 candidate axes (3 face normals of each
/// box plus the 9 edge cross products). Closed-set semantics: touching boxes
/// intersect.
template <typename Scalar>
bool obb_intersects(const Obb<Scalar>& a, const Obb<Scalar>& b) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  using std::abs;

  // Pose of b in a's frame.
  const Matrix3 Ra = a.center_pose().orientation.toRotationMatrix();
  const Matrix3 Rb = b.center_pose().orientation.toRotationMatrix();
  const Matrix3 r = Ra.transpose() * Rb;
  const Vector3 t = Ra.transpose() * (b.center() - a.center());
  const Vector3& ha = a.half_extents();
  const Vector3& hb = b.half_extents();

  // Guards the cross-product axes when edges are (nearly) parallel.
  constexpr Scalar kEpsilon = Scalar(1e-9);
  const Matrix3 abs_r = r.cwiseAbs().array() + kEpsilon;

  for (int i = 0; i < 3; ++i) {
    if (abs(t[i]) > ha[i] + hb.dot(abs_r.row(i))) return false;
  }
  for (int i = 0; i < 3; ++i) {
    if (abs(t.dot(r.col(i))) > hb[i] + ha.dot(abs_r.col(i))) return false;
  }
  for (int i = 0; i < 3; ++i) {
    const int i1 = (i + 1) % 3;
    const int i2 = (i + 2) % 3;
    for (int j = 0; j < 3; ++j) {
      const int j1 = (j + 1) % 3;
      const int j2 = (j + 2) % 3;
      if (abs(t[i2] * r(i1, j) - t[i1] * r(i2, j)) >
          ha[i1] * abs_r(i2, j) + ha[i2] * abs_r(i1, j) +
              hb[j1] * abs_r(i, j2) + hb[j2] * abs_r(i, j1)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace bimtwin
