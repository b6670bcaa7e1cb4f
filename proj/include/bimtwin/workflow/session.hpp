#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/adaptation/adaptation.hpp"
#include "bimtwin/bim/repository.hpp"
#include "bimtwin/perception/perception.hpp"
#include "bimtwin/robot/executor.hpp"
#include "bimtwin/robot/robot.hpp"
#include "bimtwin/workflow/types.hpp"

namespace bimtwin::workflow {

struct SessionOptions {
  std::uint64_t seed = 0;
  int max_replans = 3;  ///< per target; one more request goes to ManualResolution
  bool record_execution_states = true;

  nlohmann::json to_json() const;
  static SessionOptions from_json(const nlohmann::json& j);
};

/// The collaborative construction state machine. Single writer: callers
/// serialize start/step/handle/trigger_safety; observers run synchronously
/// on every appended log entry.
class Session {
 public:
  using Observer = std::function<void(const LogEntry&)>;

  /// `scenario` is the scenario document; it is kept verbatim for the log
  /// header. `policy` is informational ("interactive" or the auto rules).
  Session(nlohmann::json scenario, SessionOptions options,
          nlohmann::json policy = "interactive");

  /// Idle -> Scanning -> FetchTarget. Throws StateError when not Idle.
  void start();

  /// Takes one autonomous transition or one execution tick. Returns false
  /// when the session waits for a command or is terminal.
  bool step();

  /// Applies a supervisor command. Illegal commands are logged, answered
  /// with a CommandRejected event and leave everything unchanged.
  bool handle(const Command& cmd);

  /// Person entered the workspace while executing: Executing -> SafetyHold.
  bool trigger_safety();

  State state() const { return state_; }
  bool terminal() const { return state_ == State::TaskComplete || state_ == State::Aborted; }
  /// SafetyHold was confirmed; the next ApprovePlan resumes the held plan.
  bool resuming() const { return resuming_; }

  const bim::BimRepository& repo() const { return repo_; }
  const perception::GroundTruthWorld& world() const { return world_; }
  const robot::WorkCell& cell() const { return cell_; }
  const robot::RobotState& robot_state() const { return robot_; }
  const std::optional<std::string>& current_target() const { return current_; }
  const std::optional<adaptation::AdaptationSuggestion>& pending_suggestion() const {
    return suggestion_;
  }
  const std::optional<robot::MotionPlan>& pending_plan() const { return plan_; }
  int replans_for_target() const { return replans_; }
  const std::string& last_checkpoint() const { return last_checkpoint_; }
  const std::optional<robot::ExecutionReport>& last_execution() const { return execution_; }

  const std::vector<LogEntry>& log() const { return log_; }
  std::uint64_t steps() const { return steps_; }
  double clock() const { return clock_; }
  double robot_seconds() const { return robot_seconds_; }
  const SessionOptions& options() const { return options_; }
  nlohmann::json header() const;

  std::uint64_t subscribe(Observer observer);
  void unsubscribe(std::uint64_t id);

 private:
  void transition(State to);
  void emit(std::string type, nlohmann::json payload);
  void append(EntryKind kind, std::string type, nlohmann::json payload);
  void fail(const std::string& description, nlohmann::json extra = nlohmann::json::object());
  void reject(const Command& cmd, const std::string& reason,
              nlohmann::json extra = nlohmann::json::object());
  void reset_target();

  void do_scan();
  void do_fetch();
  void do_analysis();
  void do_planning();
  void do_execution_tick();
  void do_record();
  void do_checkpoint(bool final);
  bool apply(const Command& cmd);

  nlohmann::json scenario_;
  SessionOptions options_;
  nlohmann::json policy_;

  bim::BimRepository repo_;
  perception::GroundTruthWorld world_;
  perception::NoiseModel noise_;
  robot::WorkCell cell_;
  adaptation::Config adapt_;
  robot::RobotState robot_;

  State state_ = State::Idle;
  std::optional<std::string> current_;
  std::optional<adaptation::DeviationReport> report_;
  std::optional<adaptation::AdaptationSuggestion> suggestion_;
  std::optional<Posed> install_pose_;
  std::optional<robot::MotionPlan> plan_;
  std::optional<robot::Executor> executor_;
  std::optional<robot::ExecutionReport> execution_;
  std::string hold_token_;
  bool resuming_ = false;
  bool manual_record_ = false;
  int replans_ = 0;
  std::uint64_t plans_made_ = 0;
  std::string last_checkpoint_;
  int installed_ = 0;
  int manual_ = 0;

  double clock_ = 0.0;
  double robot_seconds_ = 0.0;
  std::uint64_t steps_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<LogEntry> log_;
  std::map<std::uint64_t, Observer> observers_;
  std::uint64_t next_observer_ = 1;
};

}  // namespace bimtwin::workflow
