#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/bim/repository.hpp"
#include "bimtwin/geometry.hpp"

namespace bimtwin::perception {

/// Marker detection error: per-axis Gaussian translation, Gaussian angle
/// about a uniformly random axis (applied in the marker frame).
struct NoiseModel {
  double sigma_translation = 0.0;
  double sigma_rotation = 0.0;
  std::uint64_t seed = 0;

  bool is_zero() const { return sigma_translation == 0.0 && sigma_rotation == 0.0; }
  static NoiseModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct StackMetadata {
  std::string workpiece_type;
  int quantity = 0;
};

struct MarkerBinding {
  std::string object_id;  ///< object id, or stack id when `stack` is set
  RigidTransformd marker_to_object;
  std::optional<StackMetadata> stack;
};

struct StackState {
  int quantity = 0;
  Posed base_pose;
};

/// The simulator's hidden physical state.
struct GroundTruthWorld {
  std::map<std::string, Posed> true_poses;
  std::map<std::string, StackState> true_stacks;
};

struct Detection {
  std::string object_id;
  Posed pose;  ///< detected object (or stack base) pose
  std::optional<StackMetadata> metadata;
};

/// Marker bindings declared in the repository, sorted by id. Stack bindings
/// take their quantity from `world`.
std::vector<MarkerBinding> marker_bindings(const bim::BimRepository& repo,
                                           const GroundTruthWorld& world);

/// Builds the true world from design poses overridden by the scenario's
/// `ground_truth` section. Physical objects are those on the AsBuilt,
/// AsDesigned and Materials layers.
GroundTruthWorld make_ground_truth(const bim::BimRepository& repo);

/// Marker pose in the world for an object at `object_pose`.
RigidTransformd marker_pose(const Posed& object_pose,
                            const RigidTransformd& marker_to_object);

/// Perturbs one marker pose. Draws exactly seven normals from `rng`.
template <typename Rng>
RigidTransformd perturb(const RigidTransformd& marker, const NoiseModel& noise,
                        Rng& rng);

/// Detects every bound object. Deterministic for a given noise seed; with
/// both sigmas zero the detections equal the true poses exactly.
std::vector<Detection> scan_environment(const GroundTruthWorld& world,
                                        std::span<const MarkerBinding> bindings,
                                        const NoiseModel& noise);

/// Stack at the detected base pose with the detected type and quantity.
bim::MaterialStack infer_stack(const std::string& stack_id, const StackMetadata& metadata,
                               const Posed& detected_base, double pitch);

}  // namespace bimtwin::perception

#include "bimtwin/perception/perturb_impl.hpp"
