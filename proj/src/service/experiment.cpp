#include "bimtwin/service/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bimtwin/hash.hpp"
#include "bimtwin/workflow/headless.hpp"

namespace bimtwin::service {

using nlohmann::json;

namespace {

std::string_view stud_name(scenarios::StudPlacement p) {
  switch (p) {
    case scenarios::StudPlacement::Nominal: return "nominal";
    case scenarios::StudPlacement::Intruding: return "intruding";
    case scenarios::StudPlacement::Outward: return "outward";
  }
  return "nominal";
}

std::string millimeters(double meters) {
  std::ostringstream os;
  os << std::round(meters * 1e4) / 10.0 << " mm";
  return os.str();
}

}  // namespace

json ExperimentConfig::to_json() const {
  return json{{"gaps", gaps},
              {"trials", trials},
              {"sigma_translation", sigma_translation},
              {"sigma_rotation", sigma_rotation},
              {"stud_fraction", stud_fraction},
              {"other_stud", stud_name(other_stud)},
              {"seed", seed},
              {"block_half_extents", {blocks.block_half_extents.x(), blocks.block_half_extents.y(),
                                      blocks.block_half_extents.z()}},
              {"drop_height", blocks.drop_height}};
}

json ExperimentRecord::to_json() const {
  json runs_json = json::array();
  for (const auto& r : runs) {
    runs_json.push_back(json{{"index", r.index},
                             {"seed", r.seed},
                             {"intruding", r.intruding},
                             {"success", r.success},
                             {"placements", r.placements},
                             {"replans", r.replans},
                             {"nearby_suggestions", r.nearby_suggestions},
                             {"failure_cause", r.failure_cause ? json(*r.failure_cause) : json(nullptr)},
                             {"human_seconds", r.human_seconds},
                             {"robot_seconds", r.robot_seconds}});
  }
  return json{{"gap", gap},
              {"trials", trials},
              {"successes", successes},
              {"success_rate", success_rate()},
              {"successful_placements", successful_placements},
              {"replan_requests", replan_requests},
              {"failure_causes", failure_causes},
              {"runs", runs_json}};
}

std::uint64_t trial_seed(std::uint64_t experiment_seed, int index) {
  return mix_seed(experiment_seed, static_cast<std::uint64_t>(index) + 1);
}

std::vector<bool> intruding_trials(std::uint64_t experiment_seed, int trials, double fraction) {
  std::vector<int> order(static_cast<std::size_t>(std::max(trials, 0)));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(experiment_seed, 0x5757));
  // Fisher-Yates by hand: std::shuffle's draw pattern is not portable.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  const auto n = static_cast<std::size_t>(std::lround(fraction * trials));
  std::vector<bool> out(order.size(), false);
  for (std::size_t i = 0; i < n && i < order.size(); ++i) out[order[i]] = true;
  return out;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& c) {
  if (c.trials < 0) throw std::invalid_argument("trials must be >= 0");
  if (!(c.stud_fraction >= 0.0 && c.stud_fraction <= 1.0)) {
    throw std::invalid_argument("stud fraction must lie in [0, 1]");
  }
  for (double g : c.gaps) {
    if (!(g > 0.0)) throw std::invalid_argument("every gap must be > 0");
  }
  const auto intruding = intruding_trials(c.seed, c.trials, c.stud_fraction);

  std::vector<ExperimentRecord> out;
  for (double gap : c.gaps) {
    ExperimentRecord rec;
    rec.gap = gap;
    rec.trials = c.trials;
    for (int k = 0; k < c.trials; ++k) {
      scenarios::BlocksOptions o = c.blocks;
      o.gap = gap;
      o.stud = intruding[k] ? scenarios::StudPlacement::Intruding : c.other_stud;
      o.sigma_translation = c.sigma_translation;
      o.sigma_rotation = c.sigma_rotation;
      o.seed = trial_seed(c.seed, k);
      const json doc = scenarios::make_blocks_scenario(o);
      const auto result = workflow::run_headless(
          doc, workflow::AutoApprove::from_json(doc.at("workcell")), o.seed, false);
      const auto& r = result.record;

      TrialSummary t;
      t.index = k;
      t.seed = o.seed;
      t.intruding = intruding[k];
      t.success = r.success;
      t.placements = r.placements;
      t.replans = r.replans;
      t.nearby_suggestions = r.nearby_suggestions;
      t.failure_cause = r.failure_cause;
      t.human_seconds = r.human_seconds;
      t.robot_seconds = r.robot_seconds;
      rec.runs.push_back(t);

      rec.successes += r.success;
      rec.successful_placements += r.placements;
      rec.replan_requests += r.replans;
      if (r.failure_cause) ++rec.failure_causes[*r.failure_cause];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

json experiment_report(const ExperimentConfig& config,
                       const std::vector<ExperimentRecord>& records) {
  json recs = json::array();
  for (const auto& r : records) recs.push_back(r.to_json());
  return json{{"kind", "block_experiment"}, {"config", config.to_json()}, {"records", recs}};
}

std::string experiment_table(const std::vector<ExperimentRecord>& records) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "gap" << std::setw(18) << "success rate (%)"
     << std::setw(34) << "replans / successful placements"
     << "failure reasons (occurrence)\n";
  for (const auto& r : records) {
    std::ostringstream rate, ratio, reasons;
    rate << std::fixed << std::setprecision(1) << 100.0 * r.success_rate();
    ratio << r.replan_requests << " / " << r.successful_placements;
    bool first = true;
    for (const auto& [cause, n] : r.failure_causes) {
      reasons << (first ? "" : ", ") << cause << " (" << n << ")";
      first = false;
    }
    os << std::left << std::setw(10) << millimeters(r.gap) << std::setw(18) << rate.str()
       << std::setw(34) << ratio.str() << reasons.str() << '\n';
  }
  double human = 0.0, robot = 0.0;
  int n = 0;
  for (const auto& r : records) {
    for (const auto& t : r.runs) {
      if (!t.success) continue;
      human += t.human_seconds;
      robot += t.robot_seconds;
      ++n;
    }
  }
  if (n > 0) {
    os << std::fixed << std::setprecision(2) << "mean successful trial: "
       << (human + robot) / n << " s (human decisions " << human / n << " s, robot "
       << robot / n << " s)\n";
  }
  return os.str();
}

}  // namespace bimtwin::service
