#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimtwin/scenarios/scenarios.hpp"

namespace bimtwin::service {

struct ExperimentConfig {
  std::vector<double> gaps{0.010, 0.005, 0.003, 0.001};
  int trials = 10;
  double sigma_translation = 0.0;
  double sigma_rotation = 0.0;
  double stud_fraction = 0.5;  ///< trials with the stud intruding into slot 0
  /// Where the stud stands in the remaining trials.
  scenarios::StudPlacement other_stud = scenarios::StudPlacement::Outward;
  std::uint64_t seed = 0;
  scenarios::BlocksOptions blocks;  ///< geometry knobs; gap, stud, noise are overwritten

  nlohmann::json to_json() const;
};

struct TrialSummary {
  int index = 0;
  std::uint64_t seed = 0;
  bool intruding = false;
  bool success = false;
  int placements = 0;
  int replans = 0;
  int nearby_suggestions = 0;
  std::optional<std::string> failure_cause;
  double human_seconds = 0.0;
  double robot_seconds = 0.0;
};

struct ExperimentRecord {
  double gap = 0.0;
  int trials = 0;
  int successes = 0;
  int successful_placements = 0;
  int replan_requests = 0;
  std::map<std::string, int> failure_causes;
  std::vector<TrialSummary> runs;

  double success_rate() const { return trials > 0 ? double(successes) / trials : 0.0; }
  nlohmann::json to_json() const;
};

/// Seed of trial `index`. It does not depend on the gap, so every gap sees
/// the same noise draws and stud placements.
std::uint64_t trial_seed(std::uint64_t experiment_seed, int index);

/// Trials with an intruding stud: round(fraction * trials) of them, chosen by
/// a seeded shuffle shared across gaps.
std::vector<bool> intruding_trials(std::uint64_t experiment_seed, int trials, double fraction);

/// Runs every gap x trial through run_headless under the scenario's
/// AutoApprove policy. Throws std::invalid_argument for a gap <= 0, a
/// negative trial count or a fraction outside [0, 1].
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

nlohmann::json experiment_report(const ExperimentConfig& config,
                                 const std::vector<ExperimentRecord>& records);

/// Aligned text with the columns: gap, success rate, replan requests /
/// successful placements, failure reasons.
std::string experiment_table(const std::vector<ExperimentRecord>& records);

}  // namespace bimtwin::service
