#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/workflow/session.hpp"

namespace bimtwin::workflow {

/// Policy that decides every Await state the way an agreeable supervisor
/// would: confirm, accept, approve. Plans whose carry path is longer than
/// `replan_path_ratio` times the straight pick-to-release distance are sent
/// back for a replan, at most `max_replans` times per target.
struct AutoApprove {
  double replan_path_ratio = 1.8;
  int max_replans = 3;
  double decision_seconds = 2.0;  ///< synthesized human time per decision

  /// Reads the `policy` object of a workcell section.
  static AutoApprove from_json(const nlohmann::json& workcell);
  nlohmann::json to_json() const;

  std::optional<Command> decide(const Session& session) const;
};

struct TargetOutcome {
  std::string target_id;
  std::string outcome;  ///< installed | manual | failed | unplaced
  std::optional<Posed> approved;
  std::optional<Posed> achieved;
};

struct TrialRecord {
  bool success = false;
  State final_state = State::Idle;
  int placements = 0;          ///< targets installed by the robot
  int replans = 0;             ///< accepted replan requests
  int nearby_suggestions = 0;  ///< NearbyObjectDeviation suggestions raised
  std::optional<std::string> failure_cause;
  double human_seconds = 0.0;
  double robot_seconds = 0.0;
  std::vector<TargetOutcome> targets;

  nlohmann::json to_json() const;
};

TrialRecord summarize(const Session& session);

struct HeadlessResult {
  Session session;
  TrialRecord record;
};

/// Runs a scenario start to finish under `policy`. A failure sends the
/// session to ManualResolution, where the policy aborts: the trial ends and
/// remaining targets stay unplaced.
HeadlessResult run_headless(nlohmann::json scenario, const AutoApprove& policy,
                            std::uint64_t seed, bool record_execution_states = true);

}  // namespace bimtwin::workflow
