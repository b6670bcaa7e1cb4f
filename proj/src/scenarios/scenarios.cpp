#include "bimtwin/scenarios/scenarios.hpp"

#include <numbers>

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/json_geometry.hpp"

namespace bimtwin::scenarios {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

Quaterniond rot_x(double a) { return Quaterniond(Eigen::AngleAxisd(a, Vector3d::UnitX())); }

json pose(const Vector3d& p, const Quaterniond& q = Quaterniond::Identity()) {
  return pose_to_json(Posed{p, q});
}

json box(const Vector3d& center, const Vector3d& half) {
  return obb_to_json(Obbd::Box(center, half));
}

json object(const std::string& id, const std::string& layer, const std::string& type,
            const json& boxes, const json& world_pose, std::array<int, 3> color) {
  return json{{"id", id},
              {"name", id},
              {"layer", layer},
              {"workpiece_type", type},
              {"boxes", boxes},
              {"pose", world_pose},
              {"color", color}};
}

json marker(const Vector3d& marker_in_object) {
  return json{{"marker_to_object",
               transform_to_json(RigidTransformd::Translation(-marker_in_object))}};
}

json noise(double st, double sr, std::uint64_t seed) {
  return json{{"sigma_translation", st}, {"sigma_rotation", sr}, {"seed", seed}};
}

json policy() {
  return json{{"replan_path_ratio", 1.8}, {"max_replans", 3}, {"decision_seconds", 2.0}};
}

}  // namespace

json make_blocks_scenario(const BlocksOptions& o) {
  const Vector3d h = o.block_half_extents;
  const double row_y = -0.18;
  const double stud_half_len = 0.45;

  json objects = json::array();
  objects.push_back(object("ground", "AsBuilt", "ground",
                           json::array({box({0.4, 0.0, -0.05}, {1.0, 1.0, 0.05})}),
                           pose(Vector3d::Zero()), {120, 120, 120}));

  // Stud lying along y; its +x face is the reference plane x = 0. The marker
  // sits on top of the far end.
  json stud = object("stud", "AsDesigned", "stud",
                     json::array({box({-0.019, 0.0, 0.0445}, {0.019, stud_half_len, 0.0445})}),
                     pose({0.0, row_y, 0.0}), {181, 140, 90});
  stud["marker"] = marker({-0.019, stud_half_len, 0.089});
  objects.push_back(stud);

  const Posed grip{Vector3d(0, 0, h.z()), rot_x(kPi)};
  for (int i = 0; i < o.blocks; ++i) {
    const std::string id = "block" + std::to_string(i);
    const double x = o.gap + h.x() + i * (2 * h.x() + o.gap);
    json b = object(id, "Target", "block", json::array({box(Vector3d::Zero(), h)}),
                    pose({x, row_y, h.z()}), {200, 60, 60});
    b["sequence_index"] = i;
    b["grip_indicator"] = pose_to_json(grip);
    b["task_related"] = true;
    b["relationship"] = i == 0 ? json{{"kind", "Seated"}, {"parent_id", "ground"}}
                               : json{{"kind", "FullyConnected"},
                                      {"parent_id", "block" + std::to_string(i - 1)}};
    objects.push_back(b);
  }

  const Vector3d stack_base(0.8, 0.3, h.z());
  json stack{{"id", "block_stack"},
             {"workpiece_type", "block"},
             {"quantity", o.blocks},
             {"base_pose", pose(stack_base)},
             {"item_vertical_pitch", 2 * h.z()},
             {"item_boxes", json::array({box(Vector3d::Zero(), h)})},
             {"marker", marker({0.0, 0.15, -h.z()})}};

  // Palm 10 mm above the top face, open jaws 15 mm outside the block sides.
  const double jaw_y = h.y() + 0.015 + 0.005;
  json gripper = json::array({box({0, 0, -0.03}, {0.03, 0.03, 0.02}),
                              box({0, jaw_y, 0.02}, {0.01, 0.005, 0.04}),
                              box({0, -jaw_y, 0.02}, {0.01, 0.005, 0.04})});

  json workcell{{"reach_envelope", json::array({box({0.5, 0.0, 0.5}, {1.0, 1.0, 0.6})})},
                {"base_travel", 0.0},
                {"nominal_speed", 0.25},
                {"speed_fraction", 0.07},
                {"rotation_radius", 0.1},
                {"drop_height", o.drop_height},
                {"safe_height", 0.6},
                {"approach_distance", 0.1},
                {"checked_step", 0.005},
                {"contact_step", 0.001},
                {"tick", 0.5},
                {"random_attempts", 64},
                {"sample_region", box({0.4, 0.05, 0.55}, {0.6, 0.6, 0.4})},
                {"gripper", gripper},
                {"home", pose({0.5, 0.0, 0.6}, rot_x(kPi))},
                {"grasp_compensation", {{"axes", {false, true, false}}, {"rotation", true}}},
                {"adaptation",
                 {{"tolerance_translation", 0.001},
                  {"tolerance_rotation", 0.2 * kPi / 180.0},
                  {"nearby_clearance", 0.0},
                  {"offset_clearance", o.gap},
                  {"max_offset", 0.05},
                  {"row_axis", {1.0, 0.0, 0.0}}}},
                {"policy", policy()}};

  json ground_truth = json::object();
  if (o.stud != StudPlacement::Nominal) {
    const double x = o.stud == StudPlacement::Intruding ? o.gap + o.intrusion : -o.outward;
    ground_truth["object_poses"] = {{"stud", pose({x, row_y, 0.0})}};
  }

  return json{{"format_version", bim::kScenarioFormatVersion},
              {"name", "blocks"},
              {"objects", objects},
              {"stacks", json::array({stack})},
              {"noise_model", noise(o.sigma_translation, o.sigma_rotation, o.seed)},
              {"workcell", workcell},
              {"ground_truth", ground_truth},
              {"as_built_records", json::array()},
              {"scan_records", json::array()}};
}

json make_drywall_scenario(const DrywallOptions& o) {
  // 8 ft x 4 ft frame standing on the floor, panels on its front (-y) face.
  const double ft = 0.3048;
  const double length = 8 * ft, height = 4 * ft, depth = 0.089;
  const double thickness = 0.0127, standoff = 0.001, joint = 0.002, lift = 0.01;
  const Vector3d frame_origin(0.5, 0.0, 0.0);

  json objects = json::array();
  objects.push_back(object("ground_floor", "AsBuilt", "ground",
                           json::array({box({1.5, -0.5, -0.05}, {3.0, 2.5, 0.05})}),
                           pose(Vector3d::Zero()), {150, 150, 150}));
  json frame = object("wall_frame", "AsDesigned", "frame",
                      json::array({box({length / 2, depth / 2, height / 2},
                                       {length / 2, depth / 2, height / 2})}),
                      pose(frame_origin), {181, 140, 90});
  frame["marker"] = marker({length, 0.0, height / 2});
  objects.push_back(frame);

  // Panels: local x along the frame, y through the thickness, z up.
  const Posed grip{Vector3d(0, -thickness / 2, 0), rot_x(-kPi / 2)};
  const double panel_y = -standoff - thickness / 2;
  struct Panel {
    const char* id;
    const char* type;
    double width, tall, x0;
  };
  const Panel panels[] = {{"panel_large_1", "panel-large", 2 * ft, 4 * ft, 0.0},
                          {"panel_large_2", "panel-large", 2 * ft, 4 * ft, 2 * ft},
                          {"panel_large_3", "panel-large", 2 * ft, 4 * ft, 4 * ft},
                          {"panel_small_1", "panel-small", 2 * ft, 2 * ft, 6 * ft}};
  int seq = 0;
  for (const auto& p : panels) {
    const Vector3d half((p.width - joint) / 2, thickness / 2, p.tall / 2);
    const Vector3d local(p.x0 + p.width / 2, panel_y, lift + p.tall / 2);
    json t = object(p.id, "Target", p.type, json::array({box(Vector3d::Zero(), half)}),
                    pose(frame_origin + local), {235, 235, 225});
    t["sequence_index"] = seq++;
    t["grip_indicator"] = pose_to_json(grip);
    t["task_related"] = true;
    t["relationship"] = {{"kind", "FullyConnected"}, {"parent_id", "wall_frame"}};
    objects.push_back(t);
  }

  objects.push_back(object("laser_curtain", "VirtualCollision", "safety",
                           json::array({box({1.5, 0.0, 1.0}, {3.0, 0.005, 1.0})}),
                           pose({0.0, 1.2, 0.0}), {255, 0, 0}));

  // Panels lie flat, front face up: item y (thickness) points down.
  const Quaterniond flat = rot_x(-kPi / 2);
  auto stack = [&](const char* id, const char* type, int qty, double tall, const Vector3d& at) {
    const Vector3d half((2 * ft - joint) / 2, thickness / 2, tall / 2);
    return json{{"id", id},
                {"workpiece_type", type},
                {"quantity", qty},
                {"base_pose", pose(at, flat)},
                {"item_vertical_pitch", thickness},
                {"item_boxes", json::array({box(Vector3d::Zero(), half)})},
                {"marker", marker({0.0, 0.0, tall / 2 + 0.05})}};
  };
  json stacks = json::array({stack("stack_large", "panel-large", 3, 4 * ft,
                                   {1.2, -1.3, thickness / 2}),
                             stack("stack_small", "panel-small", 1, 2 * ft,
                                   {2.4, -1.0, thickness / 2})});

  json workcell{{"reach_envelope", json::array({box({1.5, -0.5, 1.1}, {2.5, 2.0, 1.1})})},
                {"base_travel", 4.5},
                {"nominal_speed", 0.25},
                {"speed_fraction", 0.03},
                {"rotation_radius", 0.3},
                {"drop_height", 0.0},
                {"safe_height", 0.9},
                {"approach_distance", 0.1},
                {"checked_step", 0.01},
                {"contact_step", 0.002},
                {"tick", 0.5},
                {"random_attempts", 64},
                {"sample_region", box({1.5, -0.7, 1.3}, {1.5, 0.6, 0.5})},
                {"gripper", json::array({box({0, 0, -0.05}, {0.1, 0.1, 0.04})})},
                {"home", pose({1.5, -0.8, 1.2}, rot_x(kPi))},
                {"grasp_compensation", {{"axes", {false, false, false}}, {"rotation", false}}},
                {"adaptation",
                 {{"tolerance_translation", 0.001},
                  {"tolerance_rotation", 0.2 * kPi / 180.0},
                  {"nearby_clearance", 0.0},
                  {"offset_clearance", 0.001},
                  {"max_offset", 0.05},
                  {"row_axis", nullptr}}},
                {"policy", policy()}};

  json ground_truth = json::object();
  if (o.frame_yaw != 0.0 || !o.frame_shift.isZero()) {
    const Quaterniond yaw(Eigen::AngleAxisd(o.frame_yaw, Vector3d::UnitZ()));
    ground_truth["object_poses"] = {{"wall_frame", pose(frame_origin + o.frame_shift, yaw)}};
  }

  return json{{"format_version", bim::kScenarioFormatVersion},
              {"name", "drywall"},
              {"objects", objects},
              {"stacks", stacks},
              {"noise_model", noise(o.sigma_translation, o.sigma_rotation, o.seed)},
              {"workcell", workcell},
              {"ground_truth", ground_truth},
              {"as_built_records", json::array()},
              {"scan_records", json::array()}};
}

std::optional<json> builtin(const std::string& name) {
  if (name == "drywall") {
    DrywallOptions o;
    o.frame_yaw = 2.0 * kPi / 180.0;
    o.frame_shift = Vector3d(0.010, 0.0, 0.0);
    return make_drywall_scenario(o);
  }
  if (name == "blocks") return make_blocks_scenario({});
  return std::nullopt;
}

}  // namespace bimtwin::scenarios
