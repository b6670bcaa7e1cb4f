#pragma once

#include <random>

namespace bimtwin::perception {

template <typename Rng>
RigidTransformd perturb(const RigidTransformd& marker, const NoiseModel& noise,
                        Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Vector3d dt(n(rng), n(rng), n(rng));
  Vector3d axis(n(rng), n(rng), n(rng));
  const double angle = n(rng) * noise.sigma_rotation;
  const double len = axis.norm();
  axis = len > 0 ? Vector3d(axis / len) : Vector3d::UnitZ();
  const RigidTransformd shifted = RigidTransformd::Translation(dt * noise.sigma_translation) * marker;
  return shifted * RigidTransformd::Rotation(angle, axis);
}

}  // namespace bimtwin::perception
