// bimtwin command line: run, headless, experiment, validate, export, replay.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "bimtwin/bim/scenario_io.hpp"
#include "bimtwin/hash.hpp"
#include "bimtwin/perception/perception.hpp"
#include "bimtwin/scenarios/scenarios.hpp"
#include "bimtwin/service/experiment.hpp"
#include "bimtwin/service/server.hpp"
#include "bimtwin/workflow/event_log.hpp"
#include "bimtwin/workflow/headless.hpp"

using namespace bimtwin;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct ScenarioArgs {
  std::string scenario = "blocks";
  std::optional<double> gap;
  std::optional<double> sigma_t;
  std::optional<double> sigma_r;
};

void add_scenario_flags(CLI::App* app, ScenarioArgs& a, bool knobs) {
  app->add_option("--scenario", a.scenario, "scenario file, or a built-in name (blocks, drywall)")
      ->capture_default_str();
  if (!knobs) return;
  app->add_option("--gap", a.gap, "block scenario gap in meters")->check(CLI::PositiveNumber);
  app->add_option("--noise-sigma-t", a.sigma_t, "localization sigma, translation (m)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--noise-sigma-r", a.sigma_r, "localization sigma, rotation (rad)")
      ->check(CLI::NonNegativeNumber);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

json scenario_document(const ScenarioArgs& a) {
  json doc;
  if (a.scenario == "blocks") {
    scenarios::BlocksOptions o;
    if (a.gap) o.gap = *a.gap;
    doc = scenarios::make_blocks_scenario(o);
  } else if (auto b = scenarios::builtin(a.scenario)) {
    if (a.gap) throw std::runtime_error("--gap applies to the blocks scenario only");
    doc = *b;
  } else {
    if (a.gap) throw std::runtime_error("--gap applies to the blocks scenario only");
    try {
      doc = json::parse(read_file(a.scenario));
    } catch (const json::parse_error& e) {
      throw ParseError(a.scenario + ": " + e.what());
    }
  }
  if (a.sigma_t) doc["noise_model"]["sigma_translation"] = *a.sigma_t;
  if (a.sigma_r) doc["noise_model"]["sigma_rotation"] = *a.sigma_r;
  return doc;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

int cmd_validate(const ScenarioArgs& a) {
  const json doc = scenario_document(a);
  try {
    const auto repo = bim::load_scenario(doc.dump());
    const auto& sections = repo.sections();
    const json empty = json::object();
    const json& wc = sections.contains("workcell") ? sections.at("workcell") : empty;
    robot::WorkCell::from_json(wc);
    adaptation::Config::from_json(wc);
    perception::NoiseModel::from_json(sections.contains("noise_model") ? sections.at("noise_model")
                                                                       : empty);
    perception::make_ground_truth(repo);
    std::cout << "ok: " << repo.objects().size() << " objects, " << repo.stacks().size()
              << " stacks, " << repo.target_count() << " targets\n";
    return 0;
  } catch (const bim::ValidationError& e) {
    for (const auto& issue : e.issues()) {
      std::cerr << "invalid: " << issue.object_id << ": " << issue.rule << '\n';
    }
    return 1;
  }
}

int cmd_headless(const ScenarioArgs& a, std::uint64_t seed, const std::string& policy_name,
                 const std::string& out, const std::string& log_out) {
  if (policy_name != "auto") {
    throw std::runtime_error("headless runs need --policy auto");
  }
  const json doc = scenario_document(a);
  const auto policy = workflow::AutoApprove::from_json(doc.value("workcell", json::object()));
  auto result = workflow::run_headless(doc, policy, seed);
  if (!log_out.empty()) write_file(log_out, workflow::log_text(result.session));
  emit(result.record.to_json().dump(2) + "\n", out);
  return result.record.success ? 0 : 3;
}

int cmd_experiment(service::ExperimentConfig config, const std::string& out) {
  const auto records = service::run_experiment(config);
  std::cout << service::experiment_table(records);
  if (!out.empty()) write_file(out, service::experiment_report(config, records).dump(2) + "\n");
  return 0;
}

workflow::Session replay_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return workflow::replay(workflow::parse_log(in));
}

int cmd_export(const std::string& log_path, const std::string& out) {
  const auto s = replay_file(log_path);
  emit(bim::export_checkpoint(s.repo()), out);
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out) {
  const auto s = replay_file(log_path);
  const auto record = workflow::summarize(s);
  const std::string exported = bim::export_checkpoint(s.repo());
  json j = record.to_json();
  j["entries"] = s.log().size();
  j["export_digest"] = hex16(fnv1a(exported));
  emit(j.dump(2) + "\n", out);
  return 0;
}

int cmd_run(const ScenarioArgs& a, std::uint64_t seed, const std::string& policy_name,
            unsigned short port, const std::string& out, int slice_ms, bool exit_when_done) {
  const json doc = scenario_document(a);
  std::optional<workflow::AutoApprove> policy;
  if (policy_name == "auto") {
    policy = workflow::AutoApprove::from_json(doc.value("workcell", json::object()));
  }
  workflow::SessionOptions options;
  options.seed = seed;
  if (policy) options.max_replans = policy->max_replans;
  service::Hub hub(doc, options, "s-" + hex16(mix_seed(seed, fnv1a(doc.dump()))), policy);
  service::ServerOptions so;
  so.port = port;
  so.slice_ms = slice_ms;
  service::Server server(hub, so);
  server.start();
  std::cout << "serving session " << hub.session_id() << " on http://127.0.0.1:"
            << server.port() << " (ws /stream, GET /scenario /log /health)" << std::endl;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    const auto st = hub.state();
    if (exit_when_done &&
        (st == workflow::State::TaskComplete || st == workflow::State::Aborted)) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();
  if (!out.empty()) write_file(out, hub.log_document());
  std::cout << "final state " << workflow::to_string(hub.state()) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bimtwin: digital-twin construction robot engine"};
  app.require_subcommand(1);

  ScenarioArgs scen;
  std::uint64_t seed = 0;
  std::string policy = "auto";
  std::string out;
  std::string log_out;
  std::string log_path;
  unsigned short port = 8080;
  int slice_ms = 20;
  bool exit_when_done = false;

  auto* run = app.add_subcommand("run", "serve a session to the supervisor UI");
  add_scenario_flags(run, scen, true);
  run->add_option("--seed", seed)->capture_default_str();
  run->add_option("--policy", policy, "auto or interactive")
      ->check(CLI::IsMember({"auto", "interactive"}))
      ->capture_default_str();
  run->add_option("--port", port)->capture_default_str();
  run->add_option("--out", out, "write the session log here on exit");
  run->add_option("--slice-ms", slice_ms, "pause between engine steps (ms)")->capture_default_str();
  run->add_flag("--exit-when-done", exit_when_done, "stop serving once the task ends");

  auto* headless = app.add_subcommand("headless", "policy-driven run, prints the trial record");
  add_scenario_flags(headless, scen, true);
  headless->add_option("--seed", seed)->capture_default_str();
  headless->add_option("--policy", policy)->check(CLI::IsMember({"auto", "interactive"}))
      ->capture_default_str();
  headless->add_option("--out", out, "write the trial record here");
  headless->add_option("--log", log_out, "write the session log here");

  service::ExperimentConfig exp;
  std::vector<double> gaps;
  auto* experiment = app.add_subcommand("experiment", "block experiment over gaps x trials");
  experiment->add_option("--gap", gaps, "gap in meters (repeatable)")->check(CLI::PositiveNumber);
  experiment->add_option("--trials", exp.trials)->check(CLI::NonNegativeNumber)->capture_default_str();
  experiment->add_option("--noise-sigma-t", exp.sigma_translation)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  experiment->add_option("--noise-sigma-r", exp.sigma_rotation)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  experiment->add_option("--stud-fraction", exp.stud_fraction)->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  experiment->add_option("--seed", exp.seed)->capture_default_str();
  experiment->add_option("--out", out, "write the JSON report here");

  auto* validate = app.add_subcommand("validate", "check a scenario document");
  add_scenario_flags(validate, scen, false);

  auto* scenario = app.add_subcommand("scenario", "print a scenario document");
  add_scenario_flags(scenario, scen, true);
  scenario->add_option("--out", out);

  auto* exporter = app.add_subcommand("export", "checkpoint document from a session log");
  exporter->add_option("--log", log_path)->required()->check(CLI::ExistingFile);
  exporter->add_option("--out", out);

  auto* replayer = app.add_subcommand("replay", "re-derive the final state from a session log");
  replayer->add_option("--log", log_path)->required()->check(CLI::ExistingFile);
  replayer->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scen, seed, policy, port, out, slice_ms, exit_when_done);
    if (*headless) return cmd_headless(scen, seed, policy, out, log_out);
    if (*experiment) {
      if (!gaps.empty()) exp.gaps = gaps;
      return cmd_experiment(exp, out);
    }
    if (*validate) return cmd_validate(scen);
    if (*scenario) {
      emit(scenario_document(scen).dump(2) + "\n", out);
      return 0;
    }
    if (*exporter) return cmd_export(log_path, out);
    if (*replayer) return cmd_replay(log_path, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
