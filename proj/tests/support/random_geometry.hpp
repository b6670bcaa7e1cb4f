#pragma once

#include <cmath>
#include <random>

#include "bimtwin/geometry.hpp"

namespace bimtwin::testing {

inline Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

inline RigidTransformd random_transform(std::mt19937_64& rng, double extent = 5.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return RigidTransformd(random_rotation(rng), Vector3d(u(rng), u(rng), u(rng)));
}

inline Posed random_pose(std::mt19937_64& rng, double extent = 5.0) {
  return random_transform(rng, extent).pose();
}

/// Homogeneous 4x4 matrix built directly from a rotation matrix and a
/// translation, without going through RigidTransform.
inline Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& R, const Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}

/// Closed-box containment with a small slack, in world coordinates.
inline bool contains(const Obbd& box, const Vector3d& p, double slack = 1e-12) {
  const Vector3d local =
      box.center_pose().orientation.conjugate() * (p - box.center());
  return (local.cwiseAbs().array() <= box.half_extents().array() + slack).all();
}

/// Point-sampling intersection oracle. Samples the surface of `a` on a grid
/// of spacing `h` and tests each sample for containment in `b`; also checks
/// whether `b` lies wholly inside `a` via its center. Boxes whose common
/// region is thinner than the grid spacing may be missed.
inline bool sampled_intersects(const Obbd& a, const Obbd& b, double h,
                               double slack = 1e-12) {
  if (contains(a, b.center(), slack)) return true;
  const Vector3d he = a.half_extents();
  const Eigen::Matrix3d R = a.center_pose().orientation.toRotationMatrix();
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const int nu = static_cast<int>(std::ceil(2 * he[u] / h));
    const int nv = static_cast<int>(std::ceil(2 * he[v] / h));
    for (int side = -1; side <= 1; side += 2) {
      for (int i = 0; i <= nu; ++i) {
        for (int j = 0; j <= nv; ++j) {
          Vector3d local;
          local[axis] = side * he[axis];
          local[u] = -he[u] + std::min(2 * he[u], i * h);
          local[v] = -he[v] + std::min(2 * he[v], j * h);
          if (contains(b, a.center() + R * local, slack)) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace bimtwin::testing
