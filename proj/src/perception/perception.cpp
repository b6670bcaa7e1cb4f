#include "bimtwin/perception/perception.hpp"

#include <algorithm>
#include <random>

#include "bimtwin/json_geometry.hpp"

namespace bimtwin::perception {

using nlohmann::json;

NoiseModel NoiseModel::from_json(const json& j) {
  NoiseModel n;
  if (j.is_null()) return n;
  n.sigma_translation = j.value("sigma_translation", 0.0);
  n.sigma_rotation = j.value("sigma_rotation", 0.0);
  n.seed = j.value("seed", std::uint64_t{0});
  if (n.sigma_translation < 0 || n.sigma_rotation < 0) {
    throw ParseError("noise_model sigmas must be >= 0");
  }
  return n;
}

json NoiseModel::to_json() const {
  return json{{"sigma_translation", sigma_translation},
              {"sigma_rotation", sigma_rotation},
              {"seed", seed}};
}

RigidTransformd marker_pose(const Posed& object_pose,
                            const RigidTransformd& marker_to_object) {
  return RigidTransformd(object_pose) * marker_to_object.inverse();
}

GroundTruthWorld make_ground_truth(const bim::BimRepository& repo) {
  GroundTruthWorld w;
  for (const auto& [id, o] : repo.objects()) {
    switch (o.layer) {
      case bim::Layer::AsBuilt:
      case bim::Layer::AsDesigned:
      case bim::Layer::Materials:
        if (o.status == bim::ObjectStatus::Active) w.true_poses[id] = o.pose;
        break;
      default:
        break;
    }
  }
  for (const auto& [id, s] : repo.stacks()) {
    w.true_stacks[id] = StackState{s.quantity, s.base_pose};
  }

  const auto& sections = repo.sections();
  if (!sections.contains("ground_truth")) return w;
  const auto& gt = sections.at("ground_truth");
  if (gt.contains("object_poses")) {
    for (const auto& [id, pose] : gt.at("object_poses").items()) {
      if (!repo.find(id)) throw UnknownIdError("ground_truth: unknown object '" + id + "'");
      w.true_poses[id] = pose_from_json(pose);
    }
  }
  if (gt.contains("stacks")) {
    for (const auto& [id, s] : gt.at("stacks").items()) {
      if (!repo.find_stack(id)) throw UnknownIdError("ground_truth: unknown stack '" + id + "'");
      auto& state = w.true_stacks[id];
      if (s.contains("quantity")) state.quantity = s.at("quantity").get<int>();
      if (s.contains("base_pose")) state.base_pose = pose_from_json(s.at("base_pose"));
    }
  }
  return w;
}

std::vector<MarkerBinding> marker_bindings(const bim::BimRepository& repo,
                                           const GroundTruthWorld& world) {
  std::vector<MarkerBinding> out;
  for (const auto& [id, o] : repo.objects()) {
    if (o.marker_to_object && o.status == bim::ObjectStatus::Active &&
        o.layer != bim::Layer::Target) {
      out.push_back({id, *o.marker_to_object, std::nullopt});
    }
  }
  for (const auto& [id, s] : repo.stacks()) {
    if (!s.marker_to_object) continue;
    const auto it = world.true_stacks.find(id);
    const int quantity = it != world.true_stacks.end() ? it->second.quantity : s.quantity;
    out.push_back({id, *s.marker_to_object, StackMetadata{s.workpiece_type, quantity}});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.object_id < b.object_id; });
  return out;
}

std::vector<Detection> scan_environment(const GroundTruthWorld& world,
                                        std::span<const MarkerBinding> bindings,
                                        const NoiseModel& noise) {
  std::vector<const MarkerBinding*> order;
  for (const auto& b : bindings) order.push_back(&b);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->object_id < b->object_id; });

  std::mt19937_64 rng(noise.seed);
  std::vector<Detection> out;
  for (const auto* b : order) {
    Posed truth;
    if (b->stack) {
      const auto it = world.true_stacks.find(b->object_id);
      if (it == world.true_stacks.end()) {
        throw UnknownIdError("scan: no stack '" + b->object_id + "' in the world");
      }
      truth = it->second.base_pose;
    } else {
      const auto it = world.true_poses.find(b->object_id);
      if (it == world.true_poses.end()) {
        throw UnknownIdError("scan: no object '" + b->object_id + "' in the world");
      }
      truth = it->second;
    }
    Detection d{b->object_id, truth, b->stack};
    if (!noise.is_zero()) {
      const RigidTransformd detected_marker =
          perturb(marker_pose(truth, b->marker_to_object), noise, rng);
      d.pose = (detected_marker * b->marker_to_object).pose();
    }
    out.push_back(std::move(d));
  }
  return out;
}

bim::MaterialStack infer_stack(const std::string& stack_id, const StackMetadata& metadata,
                               const Posed& detected_base, double pitch) {
  if (metadata.quantity < 0) {
    throw ParseError("stack '" + stack_id + "' reports a negative quantity");
  }
  bim::MaterialStack s;
  s.id = stack_id;
  s.workpiece_type = metadata.workpiece_type;
  s.quantity = metadata.quantity;
  s.base_pose = detected_base;
  s.item_vertical_pitch = pitch;
  return s;
}

}  // namespace bimtwin::perception
