#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bimtwin/adaptation/adaptation.hpp"
#include "bimtwin/geometry.hpp"
#include "bimtwin/robot/robot.hpp"

namespace bimtwin::workflow {

enum class State {
  Idle,
  Scanning,
  FetchTarget,
  AwaitTargetConfirm,
  DeviationAnalysis,
  AwaitAdaptationDecision,
  Planning,
  AwaitPlanApproval,
  Previewing,
  Executing,
  SafetyHold,
  RecordingAsBuilt,
  ManualResolution,
  Checkpointing,
  TaskComplete,
  Aborted,
};

enum class CommandKind {
  ConfirmTarget,
  SelectTarget,
  AcceptSuggestion,
  AdjustPose,
  KeepOriginal,
  ManualResolve,
  RequestPreview,
  ApprovePlan,
  RequestReplan,
  ConfirmSafety,
  RequestCheckpoint,
  Abort,
};

/// What a human put in place of the target. Missing fields default to the
/// target's own geometry and the current installation candidate.
struct ManualReplacement {
  std::optional<std::vector<Obbd>> geometry;
  std::optional<Posed> pose;
};

struct Command {
  CommandKind kind = CommandKind::ConfirmTarget;
  std::string target_id;                     ///< SelectTarget
  std::optional<Posed> pose;                 ///< AdjustPose
  std::optional<ManualReplacement> replacement;  ///< ManualResolve
  double decision_seconds = 0.0;             ///< human time spent deciding

  nlohmann::json to_json() const;
  static Command from_json(const nlohmann::json& j);
};

enum class EntryKind { Command, Control, Event };

/// One line of the session log: a supervisor command, a control input
/// (start, safety interrupt) or an emitted event.
struct LogEntry {
  std::uint64_t seq = 0;
  double time = 0.0;        ///< simulated seconds
  std::uint64_t step = 0;   ///< autonomous steps taken before/while this entry
  EntryKind kind = EntryKind::Event;
  std::string type;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static LogEntry from_json(const nlohmann::json& j);
};

inline constexpr int kLogSchemaVersion = 1;

/// Legality table for supervisor commands.
bool command_legal(State state, CommandKind kind);

std::string_view to_string(State s);
std::string_view to_string(CommandKind k);
std::string_view to_string(EntryKind k);
std::optional<State> state_from_string(std::string_view s);
std::optional<CommandKind> command_kind_from_string(std::string_view s);

nlohmann::json to_json(const adaptation::DeviationReport& r);
nlohmann::json to_json(const adaptation::AdaptationSuggestion& s);
nlohmann::json to_json(const robot::RobotState& s);
nlohmann::json plan_summary(const robot::MotionPlan& p);

/// Failure tag for a physical contact, e.g. "hit-ground", "collide-with-stud".
std::string contact_cause(const std::string& workpiece_type);

}  // namespace bimtwin::workflow
