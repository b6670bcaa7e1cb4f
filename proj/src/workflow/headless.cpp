#include "bimtwin/workflow/headless.hpp"

#include <algorithm>

#include "bimtwin/json_geometry.hpp"

namespace bimtwin::workflow {

using nlohmann::json;

namespace {

// Far above any desk-scale run; guards against a policy that never ends.
constexpr std::uint64_t kMaxSteps = 50'000'000;

Command decision(CommandKind kind, double seconds) {
  Command c;
  c.kind = kind;
  c.decision_seconds = seconds;
  return c;
}

}  // namespace

AutoApprove AutoApprove::from_json(const json& workcell) {
  AutoApprove p;
  if (!workcell.is_object() || !workcell.contains("policy")) return p;
  const auto& j = workcell.at("policy");
  p.replan_path_ratio = j.value("replan_path_ratio", p.replan_path_ratio);
  p.max_replans = j.value("max_replans", p.max_replans);
  p.decision_seconds = j.value("decision_seconds", p.decision_seconds);
  return p;
}

json AutoApprove::to_json() const {
  return json{{"name", "auto"},
              {"replan_path_ratio", replan_path_ratio},
              {"max_replans", max_replans},
              {"decision_seconds", decision_seconds}};
}

std::optional<Command> AutoApprove::decide(const Session& s) const {
  switch (s.state()) {
    case State::AwaitTargetConfirm:
      return decision(CommandKind::ConfirmTarget, decision_seconds);
    case State::AwaitAdaptationDecision: {
      const auto& sug = s.pending_suggestion();
      if (sug && sug->suggested_pose) return decision(CommandKind::AcceptSuggestion, decision_seconds);
      return decision(CommandKind::Abort, decision_seconds);
    }
    case State::AwaitPlanApproval: {
      if (s.resuming()) return decision(CommandKind::ApprovePlan, decision_seconds);
      const auto& plan = *s.pending_plan();
      const double straight = (plan.waypoints[plan.detach_index].position -
                               plan.waypoints[plan.attach_index].position)
                                  .norm();
      const bool detour = straight > 0 && plan.carry_length() > replan_path_ratio * straight;
      if (detour && s.replans_for_target() < max_replans) {
        return decision(CommandKind::RequestReplan, decision_seconds);
      }
      return decision(CommandKind::ApprovePlan, decision_seconds);
    }
    case State::SafetyHold:
      return decision(CommandKind::ConfirmSafety, decision_seconds);
    case State::ManualResolution:
      return decision(CommandKind::Abort, 0.0);
    default:
      return std::nullopt;
  }
}

json TrialRecord::to_json() const {
  json targets_json = json::array();
  for (const auto& t : targets) {
    targets_json.push_back(json{{"target_id", t.target_id},
                                {"outcome", t.outcome},
                                {"approved", t.approved ? pose_to_json(*t.approved) : json(nullptr)},
                                {"achieved", t.achieved ? pose_to_json(*t.achieved) : json(nullptr)}});
  }
  return json{{"success", success},
              {"final_state", workflow::to_string(final_state)},
              {"placements", placements},
              {"replans", replans},
              {"nearby_suggestions", nearby_suggestions},
              {"failure_cause", failure_cause ? json(*failure_cause) : json(nullptr)},
              {"human_seconds", human_seconds},
              {"robot_seconds", robot_seconds},
              {"targets", targets_json}};
}

TrialRecord summarize(const Session& s) {
  TrialRecord r;
  r.final_state = s.state();
  std::optional<std::string> failed_target;
  bool unsolvable = false;
  const auto& log = s.log();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    const bool rejected = i + 1 < log.size() && log[i + 1].type == "CommandRejected";
    if (e.kind == EntryKind::Command && !rejected) {
      r.human_seconds += e.payload.value("decision_seconds", 0.0);
      if (e.type == "RequestReplan") ++r.replans;
    }
    if (e.kind != EntryKind::Event) continue;
    if (e.type == "TargetCompleted" && e.payload.at("kind") == "robot") ++r.placements;
    if (e.type == "DeviationFound") {
      const auto& sug = e.payload.at("suggestion");
      if (e.payload.at("report").at("kind") == "NearbyObjectDeviation") ++r.nearby_suggestions;
      unsolvable = sug.at("suggested_pose").is_null();
    }
    if (e.type == "Error" && !r.failure_cause) {
      r.failure_cause = e.payload.value("cause", std::string("error"));
      if (e.payload.at("target_id").is_string()) failed_target = e.payload.at("target_id");
    }
  }
  if (!r.failure_cause && s.state() == State::Aborted) {
    r.failure_cause = unsolvable ? "unsolvable-offset" : "aborted";
    failed_target = s.current_target();
  }
  r.robot_seconds = s.robot_seconds();

  std::vector<const bim::BimObject*> targets;
  for (const auto& [id, o] : s.repo().objects()) {
    if (o.layer == bim::Layer::Target) targets.push_back(&o);
  }
  std::sort(targets.begin(), targets.end(), [](const auto* a, const auto* b) {
    return a->sequence_index.value_or(0) < b->sequence_index.value_or(0);
  });
  int manual = 0;
  for (const auto* t : targets) {
    TargetOutcome o{t->id, "unplaced", std::nullopt, std::nullopt};
    if (t->status == bim::ObjectStatus::Installed) {
      o.outcome = "installed";
      if (const auto* built = s.repo().as_built_twin(t->id)) o.approved = built->pose;
    } else if (t->status == bim::ObjectStatus::ResolvedManually) {
      o.outcome = "manual";
      ++manual;
    } else if (failed_target && *failed_target == t->id) {
      o.outcome = "failed";
    }
    if (auto it = s.world().true_poses.find(t->id); it != s.world().true_poses.end()) {
      o.achieved = it->second;
    }
    r.targets.push_back(std::move(o));
  }
  r.success = s.state() == State::TaskComplete && !r.failure_cause && manual == 0;
  return r;
}

HeadlessResult run_headless(json scenario, const AutoApprove& policy, std::uint64_t seed,
                            bool record_execution_states) {
  SessionOptions options;
  options.seed = seed;
  options.max_replans = policy.max_replans;
  options.record_execution_states = record_execution_states;
  Session s(std::move(scenario), options, policy.to_json());
  s.start();
  while (!s.terminal()) {
    if (s.step()) {
      if (s.steps() > kMaxSteps) throw StateError("headless run exceeded the step budget");
      continue;
    }
    const auto cmd = policy.decide(s);
    if (!cmd) {
      throw StateError("policy has no decision in state " + std::string(to_string(s.state())));
    }
    s.handle(*cmd);
  }
  TrialRecord record = summarize(s);
  return HeadlessResult{std::move(s), std::move(record)};
}

}  // namespace bimtwin::workflow
