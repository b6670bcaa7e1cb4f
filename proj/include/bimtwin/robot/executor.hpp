#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bimtwin/robot/robot.hpp"

namespace bimtwin::robot {

struct Contact {
  std::string obstacle_id;
  std::string obstacle_source;
  std::string workpiece_type;
  std::size_t segment = 0;
  double fraction = 0.0;
  bool payload = false;  ///< the carried item (not the gripper) touched
};

struct ExecutionReport {
  bool completed = false;
  std::optional<Contact> contact;
  std::optional<Posed> achieved_place;  ///< true pose of the released item
  Posed final_end_effector;
  double robot_seconds = 0.0;
  std::size_t ticks = 0;
};

/// Bodies of the physical world: objects at their true poses and stack items.
std::vector<bim::SceneBody> true_scene(const perception::GroundTruthWorld& world,
                                       const bim::BimRepository& repo);

/// Time-stepped execution of an approved plan against the ground truth. The
/// outcome (contacts, grasp error, drop) is resolved on a fixed path grid at
/// construction, so interrupting never changes it.
class Executor {
 public:
  Executor(MotionPlan plan, const WorkCell& cell, perception::GroundTruthWorld world,
           const bim::BimRepository& repo);

  /// Advances one tick. Returns false once finished (completed or stopped).
  bool step();
  bool finished() const { return finished_; }

  /// Freezes motion; returns the confirmation token resume() expects.
  std::string interrupt();
  /// Resumes after a safety hold. Rejects a missing or wrong token.
  bool resume(const std::string& token);

  const RobotState& state() const { return state_; }
  const MotionPlan& plan() const { return plan_; }
  ExecutionReport report() const;
  const perception::GroundTruthWorld& world() const { return world_; }

 private:
  void resolve_outcome(const bim::BimRepository& repo);
  Posed pose_at(double s, std::size_t* segment) const;

  MotionPlan plan_;
  WorkCell cell_;
  perception::GroundTruthWorld world_;
  RobotState state_;
  std::vector<double> cumulative_;  ///< path parameter at each waypoint
  double stop_at_ = 0.0;            ///< path parameter where motion ends
  double s_ = 0.0;
  bool finished_ = false;
  std::size_t ticks_ = 0;
  std::string token_;
  int holds_ = 0;

  std::optional<Contact> contact_;
  std::optional<Posed> achieved_;
  RigidTransformd in_hand_;
  perception::GroundTruthWorld final_world_;
};

/// In-hand item pose after the jaws close: the true item pose expressed in
/// the end-effector frame with the compensated components reset to nominal.
RigidTransformd grasp_in_hand(const Posed& end_effector, const Posed& true_item,
                              const Posed& grip, const GraspCompensation& compensation);

}  // namespace bimtwin::robot
