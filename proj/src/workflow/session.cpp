#include "bimtwin/workflow/session.hpp"

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/hash.hpp"
#include "bimtwin/json_geometry.hpp"

namespace bimtwin::workflow {

using nlohmann::json;

namespace {

const json& section(const bim::BimRepository& repo, const char* name) {
  static const json empty = json::object();
  const auto& s = repo.sections();
  return s.contains(name) ? s.at(name) : empty;
}

}  // namespace

json SessionOptions::to_json() const {
  return json{{"seed", seed},
              {"max_replans", max_replans},
              {"record_execution_states", record_execution_states}};
}

SessionOptions SessionOptions::from_json(const json& j) {
  SessionOptions o;
  o.seed = j.value("seed", o.seed);
  o.max_replans = j.value("max_replans", o.max_replans);
  o.record_execution_states = j.value("record_execution_states", o.record_execution_states);
  return o;
}

Session::Session(json scenario, SessionOptions options, json policy)
    : scenario_(std::move(scenario)), options_(options), policy_(std::move(policy)) {
  repo_ = bim::repository_from_json(scenario_);
  cell_ = robot::WorkCell::from_json(section(repo_, "workcell"));
  adapt_ = adaptation::Config::from_json(section(repo_, "workcell"));
  noise_ = perception::NoiseModel::from_json(section(repo_, "noise_model"));
  noise_.seed = mix_seed(noise_.seed, options_.seed);
  world_ = perception::make_ground_truth(repo_);
  robot_.end_effector = cell_.home;
}

json Session::header() const {
  return json{{"kind", "header"},
              {"schema_version", kLogSchemaVersion},
              {"scenario", scenario_},
              {"seed", options_.seed},
              {"policy", policy_},
              {"config", options_.to_json()}};
}

std::uint64_t Session::subscribe(Observer observer) {
  const auto id = next_observer_++;
  observers_.emplace(id, std::move(observer));
  return id;
}

void Session::unsubscribe(std::uint64_t id) { observers_.erase(id); }

void Session::append(EntryKind kind, std::string type, json payload) {
  LogEntry e;
  e.seq = ++seq_;
  e.time = clock_;
  e.step = steps_;
  e.kind = kind;
  e.type = std::move(type);
  e.payload = std::move(payload);
  log_.push_back(std::move(e));
  for (const auto& [id, fn] : observers_) fn(log_.back());
}

void Session::emit(std::string type, json payload) {
  append(EntryKind::Event, std::move(type), std::move(payload));
}

void Session::transition(State to) {
  const State from = state_;
  state_ = to;
  emit("StateChanged", json{{"from", to_string(from)}, {"to", to_string(to)}});
}

void Session::fail(const std::string& description, json extra) {
  json payload{{"description", description},
               {"target_id", current_ ? json(*current_) : json(nullptr)}};
  payload.update(extra);
  emit("Error", std::move(payload));
  transition(State::ManualResolution);
}

void Session::reject(const Command& cmd, const std::string& reason, json extra) {
  json payload{{"command", to_string(cmd.kind)}, {"state", to_string(state_)}, {"reason", reason}};
  payload.update(extra);
  emit("CommandRejected", std::move(payload));
}

void Session::reset_target() {
  current_.reset();
  report_.reset();
  suggestion_.reset();
  install_pose_.reset();
  plan_.reset();
  executor_.reset();
  execution_.reset();
  hold_token_.clear();
  resuming_ = false;
  manual_record_ = false;
  replans_ = 0;
}

void Session::start() {
  if (state_ != State::Idle) {
    throw StateError("start: session is " + std::string(to_string(state_)) + ", not Idle");
  }
  append(EntryKind::Control, "Start", json::object());
  transition(State::Scanning);
  do_scan();
  transition(State::FetchTarget);
}

void Session::do_scan() {
  const auto bindings = perception::marker_bindings(repo_, world_);
  json warnings = json::array();
  if (bindings.empty()) {
    warnings.push_back("no markers in the scenario; planning with design poses");
    emit("BillboardMessage", json{{"text", warnings.back()}});
  }
  const auto detections = perception::scan_environment(world_, bindings, noise_);
  json out = json::array();
  for (const auto& d : detections) {
    if (d.metadata) {
      const double pitch = repo_.stack(d.object_id).item_vertical_pitch;
      repo_.register_stack(perception::infer_stack(d.object_id, *d.metadata, d.pose, pitch));
      out.push_back(json{{"id", d.object_id},
                         {"kind", "stack"},
                         {"pose", pose_to_json(d.pose)},
                         {"workpiece_type", d.metadata->workpiece_type},
                         {"quantity", d.metadata->quantity}});
    } else {
      repo_.record_scan(d.object_id, d.pose, clock_);
      out.push_back(json{{"id", d.object_id}, {"kind", "object"}, {"pose", pose_to_json(d.pose)}});
    }
  }
  emit("ScanCompleted", json{{"detections", out}, {"warnings", warnings}});
}

bool Session::step() {
  switch (state_) {
    case State::FetchTarget:
    case State::DeviationAnalysis:
    case State::Planning:
    case State::Executing:
    case State::RecordingAsBuilt:
    case State::Checkpointing:
      break;
    default:
      return false;
  }
  ++steps_;
  try {
    switch (state_) {
      case State::FetchTarget: do_fetch(); break;
      case State::DeviationAnalysis: do_analysis(); break;
      case State::Planning: do_planning(); break;
      case State::Executing: do_execution_tick(); break;
      case State::RecordingAsBuilt: do_record(); break;
      case State::Checkpointing: do_checkpoint(true); break;
      default: break;
    }
  } catch (const Error& e) {
    fail(e.what(), json{{"cause", "error"}});
  }
  return true;
}

void Session::do_fetch() {
  const auto next = repo_.next_target();
  if (!next) {
    transition(State::Checkpointing);
    return;
  }
  current_ = next->id;
  transition(State::AwaitTargetConfirm);
  emit("TargetProposed", json{{"target_id", next->id},
                              {"highlight", true},
                              {"sequence_index", next->sequence_index.value_or(-1)},
                              {"workpiece_type", next->workpiece_type}});
}

void Session::do_analysis() {
  std::pair<adaptation::DeviationReport, adaptation::AdaptationSuggestion> result;
  try {
    result = adaptation::analyze_target(repo_, *current_, adapt_);
  } catch (const adaptation::PerceptionGapError& e) {
    fail(e.what(), json{{"cause", "perception-gap"}});
    return;
  }
  auto& [report, suggestion] = result;
  report_ = report;
  if (report.kind == adaptation::DeviationKind::None) {
    install_pose_ = suggestion.suggested_pose;
    transition(State::Planning);
    emit("BillboardMessage",
         json{{"text", "no deviation for " + *current_ + "; using the design pose"}});
    return;
  }
  suggestion_ = suggestion;
  transition(State::AwaitAdaptationDecision);
  emit("DeviationFound", json{{"report", to_json(report)}, {"suggestion", to_json(suggestion)}});
}

void Session::do_planning() {
  const bim::BimObject& target = repo_.object(*current_);
  const bim::MaterialStack* stack = repo_.stack_for(target.workpiece_type);
  if (stack == nullptr) {
    fail("no material of type '" + target.workpiece_type + "' left",
         json{{"cause", "no-material"}});
    return;
  }
  if (!target.grip_indicator) {
    fail("target '" + target.id + "' has no grip indicator", json{{"cause", "no-grip"}});
    return;
  }
  robot::PlanRequest r;
  r.target_id = target.id;
  r.source_stack = stack->id;
  r.picked_body = bim::stack_item_id(stack->id, stack->quantity - 1);
  r.pick_item = stack->top_item_pose();
  r.place_item = *install_pose_;
  r.grip = *target.grip_indicator;
  r.payload_geometry = target.geometry;

  const auto scene = repo_.planning_scene();
  const std::uint64_t seed = mix_seed(options_.seed, ++plans_made_);
  emit("BillboardMessage", json{{"text", "calculating the motion plan for " + target.id}});
  try {
    plan_ = plan_ ? robot::replan(*plan_, scene, cell_, seed)
                  : robot::plan_pick_and_place(robot_, r, scene, cell_, seed);
  } catch (const robot::UnreachableError& e) {
    fail(e.what(), json{{"cause", "unreachable"}});
    return;
  } catch (const robot::PlanningError& e) {
    fail(e.what(), json{{"cause", "no-path"}});
    return;
  }
  transition(State::AwaitPlanApproval);
  json summary = plan_summary(*plan_);
  summary["replans"] = replans_;
  emit("PlanReady", std::move(summary));
}

void Session::do_execution_tick() {
  const bool more = executor_->step();
  clock_ += cell_.tick;
  robot_seconds_ += cell_.tick;
  robot_ = executor_->state();
  if (options_.record_execution_states) {
    json s = to_json(robot_);
    s["plan_id"] = plan_->plan_id;
    emit("ExecutionState", std::move(s));
  }
  if (more) return;

  execution_ = executor_->report();
  world_ = executor_->world();
  robot_.mode = robot::Mode::Idle;
  if (execution_->completed) {
    transition(State::RecordingAsBuilt);
    return;
  }
  // A human clears whatever the robot was holding.
  robot_.payload.reset();
  robot_.gripper = robot::Gripper::Open;
  const auto& c = *execution_->contact;
  fail("contact with '" + c.obstacle_id + "' during execution",
       json{{"cause", contact_cause(c.workpiece_type)},
            {"obstacle_id", c.obstacle_id},
            {"obstacle_source", c.obstacle_source},
            {"workpiece_type", c.workpiece_type},
            {"segment", c.segment},
            {"fraction", c.fraction},
            {"payload", c.payload}});
}

void Session::do_record() {
  const std::string id = *current_;
  json payload{{"target_id", id}};
  if (manual_record_) {
    ++manual_;
    const auto* rep = repo_.find(id + std::string(bim::kReplacementSuffix));
    payload["pose"] = rep ? pose_to_json(rep->pose) : json(nullptr);
    payload["kind"] = "manual";
  } else {
    ++installed_;
    repo_.record_as_built(id, *install_pose_, clock_);
    repo_.consume_material(plan_->request.source_stack);
    payload["pose"] = pose_to_json(*install_pose_);
    payload["achieved"] = execution_ && execution_->achieved_place
                              ? pose_to_json(*execution_->achieved_place)
                              : json(nullptr);
    payload["kind"] = "robot";
  }
  reset_target();
  transition(State::FetchTarget);
  emit("TargetCompleted", std::move(payload));
}

void Session::do_checkpoint(bool final) {
  last_checkpoint_ = bim::export_checkpoint(repo_);
  if (final) transition(State::TaskComplete);
  emit("CheckpointWritten", json{{"digest", hex16(fnv1a(last_checkpoint_))},
                                 {"bytes", last_checkpoint_.size()},
                                 {"as_built_records", repo_.as_built_records().size()},
                                 {"scan_records", repo_.scan_records().size()},
                                 {"final", final}});
  if (final) emit("TaskFinished", json{{"installed", installed_}, {"manual", manual_}});
}

bool Session::handle(const Command& cmd) {
  if (!command_legal(state_, cmd.kind)) {
    append(EntryKind::Command, std::string(to_string(cmd.kind)), cmd.to_json());
    reject(cmd, "not accepted in state " + std::string(to_string(state_)));
    return false;
  }
  clock_ += cmd.decision_seconds;
  append(EntryKind::Command, std::string(to_string(cmd.kind)), cmd.to_json());
  try {
    return apply(cmd);
  } catch (const Error& e) {
    fail(e.what(), json{{"cause", "error"}});
    return true;
  }
}

bool Session::apply(const Command& cmd) {
  using C = CommandKind;
  switch (cmd.kind) {
    case C::RequestCheckpoint:
      do_checkpoint(false);
      return true;

    case C::Abort:
      transition(State::Aborted);
      emit("BillboardMessage", json{{"text", "task aborted by the supervisor"}});
      return true;

    case C::ConfirmTarget:
      transition(State::DeviationAnalysis);
      return true;

    case C::SelectTarget: {
      const bim::BimObject* o = repo_.find(cmd.target_id);
      if (o == nullptr || !o->is_pending_target()) {
        reject(cmd, "'" + cmd.target_id + "' is not a pending target");
        return false;
      }
      current_ = o->id;
      emit("TargetProposed", json{{"target_id", o->id},
                                  {"highlight", true},
                                  {"sequence_index", o->sequence_index.value_or(-1)},
                                  {"workpiece_type", o->workpiece_type},
                                  {"selected", true}});
      return true;
    }

    case C::AcceptSuggestion:
      if (!suggestion_ || !suggestion_->suggested_pose) {
        reject(cmd, "there is no suggested pose to accept");
        return false;
      }
      install_pose_ = suggestion_->suggested_pose;
      transition(State::Planning);
      return true;

    case C::AdjustPose: {
      if (!cmd.pose) {
        reject(cmd, "AdjustPose needs a pose");
        return false;
      }
      const auto& target = repo_.object(*current_);
      const auto scene = adaptation::nearby_scene_for(repo_, *current_);
      const auto intruders =
          adaptation::check_nearby(*cmd.pose, target.geometry, scene, adapt_.nearby_clearance);
      if (!intruders.empty()) {
        reject(cmd, "adjusted pose collides", json{{"intruders", intruders}});
        return false;
      }
      install_pose_ = *cmd.pose;
      transition(State::Planning);
      return true;
    }

    case C::KeepOriginal:
      install_pose_ = repo_.object(*current_).pose;
      transition(State::Planning);
      return true;

    case C::ManualResolve: {
      if (!current_) {
        reject(cmd, "no current target");
        return false;
      }
      const auto& target = repo_.object(*current_);
      const ManualReplacement r = cmd.replacement.value_or(ManualReplacement{});
      const auto geometry = r.geometry.value_or(target.geometry);
      Posed pose = target.pose;
      if (r.pose) {
        pose = *r.pose;
      } else if (install_pose_) {
        pose = *install_pose_;
      } else if (suggestion_ && suggestion_->suggested_pose) {
        pose = *suggestion_->suggested_pose;
      }
      adaptation::apply_manual_replacement(repo_, target.id, geometry, pose, clock_);
      // The physical world follows: anything the robot left is cleared and
      // the replacement stands where the human put it.
      world_.true_poses.erase(target.id);
      world_.true_poses[target.id + std::string(bim::kReplacementSuffix)] = pose;
      // An item already taken by a failed execution is gone from the stack.
      if (plan_ && execution_) {
        const auto& sid = plan_->request.source_stack;
        const auto* believed = repo_.find_stack(sid);
        const auto truth = world_.true_stacks.find(sid);
        if (believed && truth != world_.true_stacks.end() &&
            truth->second.quantity < believed->quantity && believed->quantity > 0) {
          repo_.consume_material(sid);
        }
      }
      manual_record_ = true;
      transition(State::RecordingAsBuilt);
      return true;
    }

    case C::RequestPreview: {
      transition(State::Previewing);
      json frames = json::array();
      for (const auto& w : plan_->waypoints) frames.push_back(pose_to_json(w));
      emit("PreviewFrames", json{{"plan_id", plan_->plan_id},
                                 {"waypoints", frames},
                                 {"attach_index", plan_->attach_index},
                                 {"detach_index", plan_->detach_index},
                                 {"payload_boxes", boxes_to_json(plan_->request.payload_geometry)},
                                 {"grip", pose_to_json(plan_->request.grip)},
                                 {"speed", cell_.speed()}});
      transition(State::AwaitPlanApproval);
      return true;
    }

    case C::ApprovePlan:
      if (resuming_) {
        if (!executor_ || !executor_->resume(hold_token_)) {
          reject(cmd, "held execution could not be resumed");
          return false;
        }
        resuming_ = false;
        hold_token_.clear();
      } else {
        executor_.emplace(*plan_, cell_, world_, repo_);
      }
      transition(State::Executing);
      return true;

    case C::RequestReplan:
      if (resuming_) {
        reject(cmd, "a held execution resumes its approved plan; abort to replan");
        return false;
      }
      if (replans_ >= options_.max_replans) {
        fail("replan limit of " + std::to_string(options_.max_replans) + " reached",
             json{{"cause", "replan-cap"}});
        return true;
      }
      ++replans_;
      transition(State::Planning);
      return true;

    case C::ConfirmSafety:
      resuming_ = true;
      transition(State::AwaitPlanApproval);
      emit("BillboardMessage", json{{"text", "safety confirmed; approve to resume the plan"}});
      return true;
  }
  return false;
}

bool Session::trigger_safety() {
  if (state_ != State::Executing || !executor_) return false;
  const std::string token = executor_->interrupt();
  if (token.empty()) return false;
  append(EntryKind::Control, "SafetyInterrupt", json::object());
  hold_token_ = token;
  robot_ = executor_->state();
  transition(State::SafetyHold);
  emit("SafetyTriggered", json{{"token", token},
                               {"end_effector", pose_to_json(robot_.end_effector)}});
  return true;
}

}  // namespace bimtwin::workflow
