#include "bimtwin/workflow/types.hpp"

#include <array>

#include "bimtwin/json_geometry.hpp"

namespace bimtwin::workflow {

using nlohmann::json;

namespace {

constexpr std::array kStateNames = {
    "Idle",           "Scanning",         "FetchTarget",      "AwaitTargetConfirm",
    "DeviationAnalysis", "AwaitAdaptationDecision", "Planning", "AwaitPlanApproval",
    "Previewing",     "Executing",        "SafetyHold",       "RecordingAsBuilt",
    "ManualResolution", "Checkpointing",  "TaskComplete",     "Aborted"};

constexpr std::array kCommandNames = {
    "ConfirmTarget",  "SelectTarget",  "AcceptSuggestion", "AdjustPose",
    "KeepOriginal",   "ManualResolve", "RequestPreview",   "ApprovePlan",
    "RequestReplan",  "ConfirmSafety", "RequestCheckpoint", "Abort"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<const char*, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (s == names[i]) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(State s) { return kStateNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(CommandKind k) { return kCommandNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(EntryKind k) {
  switch (k) {
    case EntryKind::Command: return "command";
    case EntryKind::Control: return "control";
    case EntryKind::Event: return "event";
  }
  return "event";
}
std::optional<State> state_from_string(std::string_view s) {
  return lookup<State>(kStateNames, s);
}
std::optional<CommandKind> command_kind_from_string(std::string_view s) {
  return lookup<CommandKind>(kCommandNames, s);
}

bool command_legal(State state, CommandKind kind) {
  using C = CommandKind;
  if (kind == C::RequestCheckpoint) return true;
  switch (state) {
    case State::AwaitTargetConfirm:
      return kind == C::ConfirmTarget || kind == C::SelectTarget || kind == C::Abort;
    case State::AwaitAdaptationDecision:
      return kind == C::AcceptSuggestion || kind == C::AdjustPose || kind == C::KeepOriginal ||
             kind == C::ManualResolve || kind == C::Abort;
    case State::AwaitPlanApproval:
      return kind == C::RequestPreview || kind == C::ApprovePlan || kind == C::RequestReplan ||
             kind == C::Abort;
    case State::SafetyHold:
      return kind == C::ConfirmSafety || kind == C::Abort;
    case State::ManualResolution:
      return kind == C::ManualResolve || kind == C::Abort;
    default:
      return false;
  }
}

json Command::to_json() const {
  json j{{"type", to_string(kind)}};
  if (kind == CommandKind::SelectTarget) j["target_id"] = target_id;
  if (pose) j["pose"] = pose_to_json(*pose);
  if (replacement) {
    json r = json::object();
    if (replacement->geometry) r["boxes"] = boxes_to_json(*replacement->geometry);
    if (replacement->pose) r["pose"] = pose_to_json(*replacement->pose);
    j["replacement"] = r;
  }
  if (decision_seconds != 0.0) j["decision_seconds"] = decision_seconds;
  return j;
}

Command Command::from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ParseError("command must be an object with a string type");
  }
  const std::string type = j.at("type").get<std::string>();
  const auto kind = command_kind_from_string(type);
  if (!kind) throw ParseError("unknown command type '" + type + "'");
  Command c;
  c.kind = *kind;
  try {
    if (c.kind == CommandKind::SelectTarget) c.target_id = j.at("target_id").get<std::string>();
    // A pose-less AdjustPose parses; the session rejects it, and the log must
    // still read back.
    if (c.kind == CommandKind::AdjustPose && j.contains("pose")) {
      c.pose = pose_from_json(j.at("pose"));
    }
    if (c.kind == CommandKind::ManualResolve && j.contains("replacement") &&
        j.at("replacement").is_object()) {
      ManualReplacement r;
      const auto& rj = j.at("replacement");
      if (rj.contains("boxes")) r.geometry = boxes_from_json(rj.at("boxes"));
      if (rj.contains("pose")) r.pose = pose_from_json(rj.at("pose"));
      c.replacement = r;
    }
    c.decision_seconds = j.value("decision_seconds", 0.0);
  } catch (const json::exception& e) {
    throw ParseError(type + ": " + e.what());
  }
  return c;
}

json LogEntry::to_json() const {
  return json{{"seq", seq},   {"t", time},       {"step", step}, {"kind", workflow::to_string(kind)},
              {"type", type}, {"payload", payload}};
}

LogEntry LogEntry::from_json(const json& j) {
  try {
    LogEntry e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.time = j.at("t").get<double>();
    e.step = j.at("step").get<std::uint64_t>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "command") {
      e.kind = EntryKind::Command;
    } else if (kind == "control") {
      e.kind = EntryKind::Control;
    } else if (kind == "event") {
      e.kind = EntryKind::Event;
    } else {
      throw ParseError("unknown log entry kind '" + kind + "'");
    }
    e.type = j.at("type").get<std::string>();
    e.payload = j.value("payload", json::object());
    return e;
  } catch (const json::exception& ex) {
    throw ParseError(std::string("malformed log entry: ") + ex.what());
  }
}

json to_json(const adaptation::DeviationReport& r) {
  return json{{"kind", adaptation::to_string(r.kind)},
              {"target_id", r.target_id},
              {"reference_id", r.reference_id ? json(*r.reference_id) : json(nullptr)},
              {"design_transform", transform_to_json(r.design_transform)},
              {"built_transform", transform_to_json(r.built_transform)},
              {"magnitude",
               {{"translation", r.magnitude.translation}, {"rotation", r.magnitude.rotation}}},
              {"intruders", r.intruders}};
}

json to_json(const adaptation::AdaptationSuggestion& s) {
  json alts = json::array();
  for (auto a : s.alternatives) alts.push_back(adaptation::to_string(a));
  return json{{"target_id", s.target_id},
              {"suggested_pose", s.suggested_pose ? pose_to_json(*s.suggested_pose) : json(nullptr)},
              {"basis", adaptation::to_string(s.basis)},
              {"affects_subsequent", s.affects_subsequent},
              {"alternatives", alts},
              {"note", s.note}};
}

json to_json(const robot::RobotState& s) {
  json payload = nullptr;
  if (s.payload) {
    payload = {{"object_id", s.payload->object_id},
               {"in_hand", transform_to_json(s.payload->in_hand)}};
  }
  return json{{"end_effector", pose_to_json(s.end_effector)},
              {"gripper", robot::to_string(s.gripper)},
              {"payload", payload},
              {"mode", robot::to_string(s.mode)},
              {"waypoint_index", s.waypoint_index},
              {"time", s.time}};
}

json plan_summary(const robot::MotionPlan& p) {
  const double straight = (p.waypoints[p.detach_index].position -
                           p.waypoints[p.attach_index].position).norm();
  return json{{"plan_id", p.plan_id},
              {"target_id", p.request.target_id},
              {"strategy", robot::to_string(p.strategy)},
              {"seed", p.seed},
              {"waypoints", p.waypoints.size()},
              {"attach_index", p.attach_index},
              {"detach_index", p.detach_index},
              {"carry_length", p.carry_length()},
              {"straight_distance", straight},
              {"path_length", p.path_length()}};
}

std::string contact_cause(const std::string& workpiece_type) {
  if (workpiece_type == "ground") return "hit-ground";
  return "collide-with-" + (workpiece_type.empty() ? std::string("object") : workpiece_type);
}

}  // namespace bimtwin::workflow
