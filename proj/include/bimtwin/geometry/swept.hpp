#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "bimtwin/geometry/obb.hpp"
#include "bimtwin/geometry/transform.hpp"

namespace bimtwin {

/// First contact found while sweeping a body along a pose path.
struct SweptHit {
  std::size_t path_index = 0;   ///< segment start waypoint (or the waypoint)
  std::size_t scene_index = 0;  ///< index into the scene span
  std::size_t body_index = 0;   ///< which body box touched
  double fraction = 0.0;        ///< position along the segment in [0, 1]
};

namespace detail {

template <typename Scalar>
struct WorldAabb {
  Eigen::Matrix<Scalar, 3, 1> lo;
  Eigen::Matrix<Scalar, 3, 1> hi;

  explicit WorldAabb(const Obb<Scalar>& box) {
    const auto h = box.aabb_half_extents();
    lo = box.center() - h;
    hi = box.center() + h;
  }
  bool overlaps(const WorldAabb& o) const {
    return (lo.array() <= o.hi.array()).all() &&
           (o.lo.array() <= hi.array()).all();
  }
};

/// Number of dyadic subdivisions so that no point of the body moves more
/// than `step` between samples. Powers of two keep the sample set of a
/// coarser step a subset of any finer one.
template <typename Scalar>
std::size_t dyadic_subdivisions(const Pose<Scalar>& a, const Pose<Scalar>& b,
                                Scalar body_radius, Scalar step) {
  const Scalar linear = (b.position - a.position).norm();
  const Scalar angle =
      RigidTransform<Scalar>::angular_distance(a.orientation, b.orientation);
  const Scalar travel = linear + angle * body_radius;
  std::size_t n = 1;
  while (travel / static_cast<Scalar>(n) > step && n < (std::size_t(1) << 30)) {
    n <<= 1;
  }
  return n;
}

}  // namespace detail

/// Checks `body` (boxes in the moving frame) at a single pose against a
/// scene of world-frame boxes. Returns (scene index, body index) of the first
/// overlap.
template <typename Scalar>
std::optional<std::pair<std::size_t, std::size_t>> pose_collides(
    const Pose<Scalar>& pose, std::span<const Obb<Scalar>> body,
    std::span<const Obb<Scalar>> scene) {
  const RigidTransform<Scalar> X(pose);
  for (std::size_t bi = 0; bi < body.size(); ++bi) {
    const Obb<Scalar> world = body[bi].transformed(X);
    const detail::WorldAabb<Scalar> wa(world);
    for (std::size_t si = 0; si < scene.size(); ++si) {
      if (!wa.overlaps(detail::WorldAabb<Scalar>(scene[si]))) continue;
      if (obb_intersects(world, scene[si])) return std::make_pair(si, bi);
    }
  }
  return std::nullopt;
}

/// Sweeps the body along `path` (linear position, slerp orientation) and
/// reports the first sampled configuration that intersects the scene. The
/// spatial resolution of the sampling is at most `step`.
template <typename Scalar>
std::optional<SweptHit> swept_collides(std::span<const Pose<Scalar>> path,
                                       std::span<const Obb<Scalar>> body,
                                       std::span<const Obb<Scalar>> scene,
                                       Scalar step) {
  if (!(step > Scalar(0))) {
    throw std::invalid_argument("swept_collides: step must be positive");
  }
  if (path.empty()) {
    throw std::invalid_argument("swept_collides: path must not be empty");
  }
  if (body.empty() || scene.empty()) return std::nullopt;

  Scalar body_radius = 0;
  for (const auto& b : body) {
    body_radius = std::max(body_radius, b.center().norm() + b.radius());
  }

  // Broad phase: scene boxes whose AABB can be reached at all.
  std::vector<detail::WorldAabb<Scalar>> scene_aabbs;
  scene_aabbs.reserve(scene.size());
  for (const auto& s : scene) scene_aabbs.emplace_back(s);

  auto check = [&](const Pose<Scalar>& pose)
      -> std::optional<std::pair<std::size_t, std::size_t>> {
    const RigidTransform<Scalar> X(pose);
    for (std::size_t bi = 0; bi < body.size(); ++bi) {
      const Obb<Scalar> world = body[bi].transformed(X);
      const detail::WorldAabb<Scalar> wa(world);
      for (std::size_t si = 0; si < scene.size(); ++si) {
        if (!wa.overlaps(scene_aabbs[si])) continue;
        if (obb_intersects(world, scene[si])) return std::make_pair(si, bi);
      }
    }
    return std::nullopt;
  };

  if (path.size() == 1) {
    if (auto hit = check(path.front())) {
      return SweptHit{0, hit->first, hit->second, 0.0};
    }
    return std::nullopt;
  }

  std::vector<std::size_t> near;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    // Every body point stays within body_radius of the moving origin, so the
    // segment sweeps inside this box.
    detail::WorldAabb<Scalar> sweep = scene_aabbs.front();
    sweep.lo = path[i].position.cwiseMin(path[i + 1].position).array() - body_radius;
    sweep.hi = path[i].position.cwiseMax(path[i + 1].position).array() + body_radius;
    near.clear();
    for (std::size_t si = 0; si < scene.size(); ++si) {
      if (sweep.overlaps(scene_aabbs[si])) near.push_back(si);
    }
    if (near.empty()) continue;

    const std::size_t n =
        detail::dyadic_subdivisions(path[i], path[i + 1], body_radius, step);
    for (std::size_t k = (i == 0 ? 0 : 1); k <= n; ++k) {
      const Scalar t = static_cast<Scalar>(k) / static_cast<Scalar>(n);
      const RigidTransform<Scalar> X(interpolate(path[i], path[i + 1], t));
      for (std::size_t bi = 0; bi < body.size(); ++bi) {
        const Obb<Scalar> world = body[bi].transformed(X);
        const detail::WorldAabb<Scalar> wa(world);
        for (std::size_t si : near) {
          if (!wa.overlaps(scene_aabbs[si])) continue;
          if (obb_intersects(world, scene[si])) {
            return SweptHit{i, si, bi, static_cast<double>(t)};
          }
        }
      }
    }
  }
  return std::nullopt;
}

/// Single-box convenience overload.
template <typename Scalar>
std::optional<SweptHit> swept_collides(std::span<const Pose<Scalar>> path,
                                       const Obb<Scalar>& body,
                                       std::span<const Obb<Scalar>> scene,
                                       Scalar step) {
  return swept_collides(path, std::span<const Obb<Scalar>>(&body, 1), scene,
                        step);
}

}  // namespace bimtwin
