#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/bim/repository.hpp"
#include "bimtwin/geometry.hpp"
#include "bimtwin/perception/perception.hpp"

namespace bimtwin::robot {

/// Which in-hand error components the gripper removes when it closes. The
/// jaws close along the end-effector y axis.
struct GraspCompensation {
  std::array<bool, 3> axes{false, true, false};
  bool rotation = true;
};

struct WorkCell {
  std::vector<Obbd> reach_envelope;  ///< world boxes the end effector can reach
  double base_travel = 0.0;          ///< informational, already in the envelope
  double nominal_speed = 0.25;       ///< m/s at speed_fraction 1
  double speed_fraction = 1.0;
  double rotation_radius = 0.1;      ///< converts rotation to path length
  double drop_height = 0.0;
  double safe_height = 1.0;          ///< world z of lift-and-carry vias
  double approach_distance = 0.1;
  double checked_step = 0.005;       ///< planning collision resolution
  double contact_step = 0.001;       ///< execution contact resolution
  double tick = 0.1;                 ///< seconds per execution step
  int random_attempts = 64;
  std::optional<Obbd> sample_region;  ///< via sampling region (default: envelope)
  std::vector<Obbd> gripper;          ///< end-effector frame
  Posed home;
  GraspCompensation compensation;

  static WorkCell from_json(const nlohmann::json& workcell);
  nlohmann::json to_json() const;
  double speed() const { return nominal_speed * speed_fraction; }
  bool reachable(const Vector3d& p) const;
};

enum class Gripper { Open, Closed };
enum class Mode { Idle, Moving, SafetyHold };

struct Payload {
  std::string object_id;
  std::vector<Obbd> geometry;  ///< item frame
  RigidTransformd in_hand;     ///< item pose in the end-effector frame
};

struct RobotState {
  Posed end_effector;
  Gripper gripper = Gripper::Open;
  std::optional<Payload> payload;
  Mode mode = Mode::Idle;
  std::size_t waypoint_index = 0;  ///< segment being traversed
  double time = 0.0;               ///< simulated seconds since plan start
};

/// Everything the planner needs to know about one pick-and-place task.
struct PlanRequest {
  std::string target_id;
  std::string source_stack;
  std::string picked_body;  ///< scene id of the item being picked
  Posed pick_item;          ///< believed pose of the item on the stack
  Posed place_item;         ///< approved installation pose
  Posed grip;               ///< grip indicator (item frame)
  std::vector<Obbd> payload_geometry;
};

enum class PlanStrategy { Straight, LiftCarry, Sampled };

struct MotionPlan {
  std::string plan_id;
  std::vector<Posed> waypoints;  ///< end-effector poses, world frame
  std::size_t attach_index = 0;
  std::size_t detach_index = 0;
  double checked_step = 0.0;
  std::uint64_t seed = 0;
  PlanStrategy strategy = PlanStrategy::Straight;
  PlanRequest request;

  /// End-effector path length from pick to release.
  double carry_length() const;
  /// Whole path length (translation only).
  double path_length() const;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};
class UnreachableError : public PlanningError {
 public:
  using PlanningError::PlanningError;
};
class NoPathError : public PlanningError {
 public:
  using PlanningError::PlanningError;
};

/// True when `body` touches the item boxes (world frame): the item rests on
/// it or leans against it.
bool supports(const bim::SceneBody& body, std::span<const Obbd> item);

/// Moving body and static scene for one plan segment, with the contacts the
/// planner treats as intended removed.
struct SegmentCheck {
  std::vector<Obbd> body;
  std::vector<Obbd> scene;
  std::vector<std::string> scene_ids;
};
SegmentCheck planning_segment(const MotionPlan& plan, std::size_t segment,
                              std::span<const bim::SceneBody> scene, const WorkCell& cell);

/// Candidates in order: straight, lift-and-carry, seeded sampled vias.
MotionPlan plan_pick_and_place(const RobotState& state, const PlanRequest& request,
                               std::span<const bim::SceneBody> scene, const WorkCell& cell,
                               std::uint64_t seed);

/// New plan for the same endpoints that differs from `previous`. Only
/// strategies after the previous one are tried (straight, lift-and-carry,
/// sampled), so a replan never re-offers a path the human already saw.
MotionPlan replan(const MotionPlan& previous, std::span<const bim::SceneBody> scene,
                  const WorkCell& cell, std::uint64_t seed);

/// First collision of the plan against `scene` (segment, scene id), if any.
std::optional<std::pair<std::size_t, std::string>> validate_plan(
    const MotionPlan& plan, std::span<const bim::SceneBody> scene, const WorkCell& cell);

std::string_view to_string(PlanStrategy s);
std::string_view to_string(Gripper g);
std::string_view to_string(Mode m);

}  // namespace bimtwin::robot
