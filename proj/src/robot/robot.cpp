#include "bimtwin/robot/robot.hpp"

#include <algorithm>
#include <random>

#include "bimtwin/hash.hpp"
#include "bimtwin/json_geometry.hpp"

namespace bimtwin::robot {

using nlohmann::json;

namespace {

std::string make_plan_id(std::uint64_t seed, const std::vector<Posed>& waypoints) {
  std::uint64_t h = fnv1a(kFnvOffset, &seed, sizeof seed);
  for (const auto& w : waypoints) {
    h = fnv1a(h, w.position.data(), 3 * sizeof(double));
    h = fnv1a(h, w.orientation.coeffs().data(), 4 * sizeof(double));
  }
  return hex16(h);
}

/// Pose backed off along the tool axis (end-effector -z).
Posed approach(const Posed& ee, double distance) {
  return (RigidTransformd(ee) * RigidTransformd::Translation(0, 0, -distance)).pose();
}

Posed ee_for_item(const Posed& item, const Posed& grip) {
  return (RigidTransformd(item) * RigidTransformd(grip)).pose();
}

Obbd bounding_box(std::span<const Obbd> boxes) {
  Vector3d lo = Vector3d::Constant(1e300), hi = Vector3d::Constant(-1e300);
  for (const auto& b : boxes) {
    const Vector3d h = b.aabb_half_extents();
    lo = lo.cwiseMin(b.center() - h);
    hi = hi.cwiseMax(b.center() + h);
  }
  return Obbd::Box((lo + hi) / 2, ((hi - lo) / 2).cwiseMax(Vector3d::Constant(1e-6)));
}

struct Skeleton {
  std::vector<Posed> head;  ///< current .. post-pick
  std::vector<Posed> tail;  ///< pre-place .. post-place
  std::size_t attach_in_head = 0;
};

Skeleton skeleton(const RobotState& state, const PlanRequest& r, const WorkCell& cell) {
  const Posed pick = ee_for_item(r.pick_item, r.grip);
  Posed release = ee_for_item(r.place_item, r.grip);
  release.position.z() += cell.drop_height;
  const Posed pre_pick = approach(pick, cell.approach_distance);
  const Posed pre_place = approach(release, cell.approach_distance);
  Skeleton s;
  s.head = {state.end_effector, pre_pick, pick, pre_pick};
  s.attach_in_head = 2;
  s.tail = {pre_place, release, pre_place};
  return s;
}

MotionPlan assemble(const Skeleton& sk, const std::vector<Posed>& vias, const PlanRequest& r,
                    const WorkCell& cell, std::uint64_t seed, PlanStrategy strategy) {
  MotionPlan p;
  p.waypoints = sk.head;
  p.waypoints.insert(p.waypoints.end(), vias.begin(), vias.end());
  p.attach_index = sk.attach_in_head;
  p.detach_index = p.waypoints.size() + 1;
  p.waypoints.insert(p.waypoints.end(), sk.tail.begin(), sk.tail.end());
  p.checked_step = cell.checked_step;
  p.seed = seed;
  p.strategy = strategy;
  p.request = r;
  p.plan_id = make_plan_id(seed, p.waypoints);
  return p;
}

bool same_path(const MotionPlan& a, const MotionPlan& b) {
  if (a.waypoints.size() != b.waypoints.size()) return false;
  for (std::size_t i = 0; i < a.waypoints.size(); ++i) {
    if (!(a.waypoints[i] == b.waypoints[i])) return false;
  }
  return true;
}

bool reachable(const MotionPlan& p, const WorkCell& cell) {
  for (std::size_t i = 1; i < p.waypoints.size(); ++i) {
    if (!cell.reachable(p.waypoints[i].position)) return false;
  }
  return true;
}

/// Candidate generator shared by planning and replanning. Candidates equal
/// to `avoid` are skipped.
MotionPlan search(const RobotState& state, const PlanRequest& r,
                  std::span<const bim::SceneBody> scene, const WorkCell& cell,
                  std::uint64_t seed, const MotionPlan* avoid) {
  // A replan offers something new: only strategies after the previous one.
  const int first = avoid == nullptr ? 0
                    : avoid->strategy == PlanStrategy::Sampled
                        ? 2
                        : static_cast<int>(avoid->strategy) + 1;
  const Skeleton sk = skeleton(state, r, cell);
  for (const auto& w : {sk.head[1], sk.head[2], sk.tail[0], sk.tail[1]}) {
    if (!cell.reachable(w.position)) {
      throw UnreachableError("pose (" + std::to_string(w.position.x()) + ", " +
                             std::to_string(w.position.y()) + ", " +
                             std::to_string(w.position.z()) + ") for '" + r.target_id +
                             "' is outside the reach envelope");
    }
  }

  auto accept = [&](const MotionPlan& p) {
    if (avoid != nullptr && same_path(p, *avoid)) return false;
    return reachable(p, cell) && !validate_plan(p, scene, cell);
  };

  if (first <= 0) {
    auto p = assemble(sk, {}, r, cell, seed, PlanStrategy::Straight);
    if (accept(p)) return p;
  }
  if (first <= 1) {
    const Posed& lift_from = sk.head.back();
    const Posed& lift_to = sk.tail.front();
    Posed a = lift_from, b = lift_to;
    a.position.z() = std::max(a.position.z(), cell.safe_height);
    b.position.z() = std::max(b.position.z(), cell.safe_height);
    auto p = assemble(sk, {a, b}, r, cell, seed, PlanStrategy::LiftCarry);
    if (accept(p)) return p;
  }

  const Obbd region = cell.sample_region ? *cell.sample_region : bounding_box(cell.reach_envelope);
  const Vector3d lo = region.center() - region.aabb_half_extents();
  const Vector3d hi = region.center() + region.aabb_half_extents();
  const double floor_z = std::max(sk.head.back().position.z(), sk.tail.front().position.z());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < cell.random_attempts; ++attempt) {
    const int count = 1 + static_cast<int>(u(rng) * 2.0) % 2;
    std::vector<Posed> vias;
    for (int k = 0; k < count; ++k) {
      Vector3d p;
      for (int a = 0; a < 3; ++a) p[a] = lo[a] + u(rng) * (hi[a] - lo[a]);
      p.z() = std::clamp(std::max(p.z(), floor_z), lo.z(), hi.z());
      const double t = static_cast<double>(k + 1) / (count + 1);
      vias.push_back(Posed{p, sk.head.back().orientation.slerp(t, sk.tail.front().orientation)
                                  .normalized()});
    }
    auto p = assemble(sk, vias, r, cell, seed, PlanStrategy::Sampled);
    if (accept(p)) return p;
  }
  throw NoPathError("no collision-free path for '" + r.target_id + "' after " +
                    std::to_string(cell.random_attempts) + " sampled attempts");
}

}  // namespace

bool supports(const bim::SceneBody& body, std::span<const Obbd> item) {
  for (const auto& a : body.boxes) {
    for (const auto& b : item) {
      if (obb_intersects(a, b)) return true;
    }
  }
  return false;
}

WorkCell WorkCell::from_json(const json& j) {
  WorkCell c;
  if (!j.is_object()) return c;
  if (j.contains("reach_envelope")) c.reach_envelope = boxes_from_json(j.at("reach_envelope"));
  c.base_travel = j.value("base_travel", c.base_travel);
  c.nominal_speed = j.value("nominal_speed", c.nominal_speed);
  c.speed_fraction = j.value("speed_fraction", c.speed_fraction);
  c.rotation_radius = j.value("rotation_radius", c.rotation_radius);
  c.drop_height = j.value("drop_height", c.drop_height);
  c.safe_height = j.value("safe_height", c.safe_height);
  c.approach_distance = j.value("approach_distance", c.approach_distance);
  c.checked_step = j.value("checked_step", c.checked_step);
  c.contact_step = j.value("contact_step", c.contact_step);
  c.tick = j.value("tick", c.tick);
  c.random_attempts = j.value("random_attempts", c.random_attempts);
  if (j.contains("sample_region") && !j.at("sample_region").is_null()) {
    c.sample_region = obb_from_json(j.at("sample_region"));
  }
  if (j.contains("gripper")) c.gripper = boxes_from_json(j.at("gripper"));
  if (j.contains("home")) c.home = pose_from_json(j.at("home"));
  if (j.contains("grasp_compensation")) {
    const auto& g = j.at("grasp_compensation");
    if (g.contains("axes")) c.compensation.axes = g.at("axes").get<std::array<bool, 3>>();
    c.compensation.rotation = g.value("rotation", c.compensation.rotation);
  }
  if (!(c.speed_fraction > 0 && c.speed_fraction <= 1)) {
    throw ParseError("workcell.speed_fraction must be in (0, 1]");
  }
  if (c.drop_height < 0) throw ParseError("workcell.drop_height must be >= 0");
  if (!(c.checked_step > 0) || !(c.contact_step > 0) || !(c.tick > 0) ||
      !(c.nominal_speed > 0)) {
    throw ParseError("workcell steps, tick and speed must be positive");
  }
  return c;
}

json WorkCell::to_json() const {
  return json{{"reach_envelope", boxes_to_json(reach_envelope)},
              {"base_travel", base_travel},
              {"nominal_speed", nominal_speed},
              {"speed_fraction", speed_fraction},
              {"rotation_radius", rotation_radius},
              {"drop_height", drop_height},
              {"safe_height", safe_height},
              {"approach_distance", approach_distance},
              {"checked_step", checked_step},
              {"contact_step", contact_step},
              {"tick", tick},
              {"random_attempts", random_attempts},
              {"sample_region", sample_region ? obb_to_json(*sample_region) : json(nullptr)},
              {"gripper", boxes_to_json(gripper)},
              {"home", pose_to_json(home)},
              {"grasp_compensation",
               {{"axes", compensation.axes}, {"rotation", compensation.rotation}}}};
}

bool WorkCell::reachable(const Vector3d& p) const {
  if (reach_envelope.empty()) return true;
  for (const auto& box : reach_envelope) {
    const Vector3d local = box.center_pose().orientation.conjugate() * (p - box.center());
    if ((local.cwiseAbs().array() <= box.half_extents().array()).all()) return true;
  }
  return false;
}

double MotionPlan::carry_length() const {
  double len = 0;
  for (std::size_t i = attach_index; i < detach_index && i + 1 < waypoints.size(); ++i) {
    len += (waypoints[i + 1].position - waypoints[i].position).norm();
  }
  return len;
}

double MotionPlan::path_length() const {
  double len = 0;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    len += (waypoints[i + 1].position - waypoints[i].position).norm();
  }
  return len;
}

SegmentCheck planning_segment(const MotionPlan& plan, std::size_t segment,
                              std::span<const bim::SceneBody> scene, const WorkCell& cell) {
  SegmentCheck out;
  out.body = cell.gripper;
  if (segment >= plan.attach_index && segment < plan.detach_index) {
    const RigidTransformd in_hand = RigidTransformd(plan.request.grip).inverse();
    for (const auto& b : plan.request.payload_geometry) out.body.push_back(b.transformed(in_hand));
  }
  // The approach to the pick and the lift-off may touch the source stack
  // and whatever the picked item rests on.
  const bool at_pick = segment + 1 == plan.attach_index || segment == plan.attach_index;
  std::vector<Obbd> item;
  if (at_pick) {
    for (const auto& b : plan.request.payload_geometry) {
      item.push_back(b.transformed(RigidTransformd(plan.request.pick_item)));
    }
  }
  for (const auto& body : scene) {
    if (body.id == plan.request.picked_body) continue;
    if (at_pick && (body.source_id == plan.request.source_stack || supports(body, item))) continue;
    for (const auto& b : body.boxes) {
      out.scene.push_back(b);
      out.scene_ids.push_back(body.id);
    }
  }
  return out;
}

std::optional<std::pair<std::size_t, std::string>> validate_plan(
    const MotionPlan& plan, std::span<const bim::SceneBody> scene, const WorkCell& cell) {
  for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    const SegmentCheck seg = planning_segment(plan, i, scene, cell);
    if (seg.body.empty()) continue;
    const std::span<const Posed> path(plan.waypoints.data() + i, 2);
    if (auto hit = swept_collides<double>(path, seg.body, seg.scene, plan.checked_step)) {
      return std::make_pair(i, seg.scene_ids[hit->scene_index]);
    }
  }
  return std::nullopt;
}

MotionPlan plan_pick_and_place(const RobotState& state, const PlanRequest& request,
                               std::span<const bim::SceneBody> scene, const WorkCell& cell,
                               std::uint64_t seed) {
  if (state.payload || state.gripper == Gripper::Closed) {
    throw PlanningError("cannot plan a pick while holding a payload");
  }
  return search(state, request, scene, cell, seed, nullptr);
}

MotionPlan replan(const MotionPlan& previous, std::span<const bim::SceneBody> scene,
                  const WorkCell& cell, std::uint64_t seed) {
  RobotState start;
  start.end_effector = previous.waypoints.front();
  return search(start, previous.request, scene, cell, seed, &previous);
}

std::string_view to_string(PlanStrategy s) {
  switch (s) {
    case PlanStrategy::Straight: return "straight";
    case PlanStrategy::LiftCarry: return "lift-carry";
    case PlanStrategy::Sampled: return "sampled";
  }
  return "straight";
}

std::string_view to_string(Gripper g) { return g == Gripper::Open ? "open" : "closed"; }

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Idle: return "idle";
    case Mode::Moving: return "moving";
    case Mode::SafetyHold: return "safety-hold";
  }
  return "idle";
}

}  // namespace bimtwin::robot
