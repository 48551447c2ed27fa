#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fedff/errors.hpp"
#include "fedff/experiments.hpp"

namespace fedff {

namespace {

// --split accepts a schedule run index ("3") or an explicit test-client list
// ("I,VI,VIII,XI"). The sweep command instead reads it as a list of schedule
// runs ("1,2,3").
void apply_split(ExperimentSpec& spec, const std::string& split, bool sweep) {
  if (split.empty()) return;
  std::vector<std::string> parts;
  std::stringstream ss(split);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);

  const bool all_numeric = std::all_of(parts.begin(), parts.end(), [](const auto& p) {
    return !p.empty() && std::all_of(p.begin(), p.end(), ::isdigit);
  });
  if (sweep) {
    if (!all_numeric)
      throw std::invalid_argument("sweep --split takes schedule run indices");
    spec.sweep_runs.clear();
    for (const auto& p : parts) spec.sweep_runs.push_back(std::stoi(p));
    for (int r : spec.sweep_runs) split_schedule(r);  // validates
    return;
  }
  if (parts.size() == 1 && all_numeric) {
    spec.split_run = std::stoi(parts[0]);
    split_schedule(*spec.split_run);  // validates
  } else {
    for (const auto& id : parts) client_index(id);  // validates
    spec.split_test = parts;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Federated neural feedforward trajectory-tracking laboratory"};
  app.require_subcommand(1);

  ExperimentSpec spec;
  if (const char* env_out = std::getenv("FEDFF_OUT")) spec.out_dir = env_out;

  std::string split;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--paths", spec.paths_dir, "Directory of path spec JSON files");
    cmd->add_option("--out", spec.out_dir, "Output directory");
    cmd->add_option("--seed", spec.master_seed, "Master seed");
    cmd->add_option("--workers", spec.workers, "Worker pool size");
    return cmd;
  };
  auto add_training = [&](CLI::App* cmd) {
    cmd->add_option("--rounds", spec.rounds, "Global communication rounds G");
    cmd->add_option("--epochs", spec.local_epochs, "Local epochs E");
    cmd->add_option("--split", split,
                    "Schedule run index or explicit test-client list");
    cmd->add_option_function<std::string>(
        "--weighting",
        [&spec](const std::string& w) {
          if (w == "sample")
            spec.weighting = Weighting::kSampleWeighted;
          else if (w == "uniform")
            spec.weighting = Weighting::kUniform;
          else
            throw CLI::ValidationError("--weighting must be sample or uniform");
        },
        "Aggregation weighting: sample|uniform");
    cmd->add_flag("--accumulate-data", spec.accumulate_data,
                  "Keep client lap data across rounds");
    cmd->add_flag("--gzip-logs", spec.gzip_logs, "Compress trajectory logs");
    return cmd;
  };

  add_common(app.add_subcommand("baseline", "FB vs FB+analytic on all clients"));
  add_training(add_common(
      app.add_subcommand("centralized", "Centralized neural feedforward")));
  add_training(add_common(
      app.add_subcommand("federated", "Federated proof of concept")));
  add_training(add_common(app.add_subcommand("sweep", "Epoch/round sweep")));
  add_training(add_common(
      app.add_subcommand("local-vs-fed", "Per-client local models vs federated")));
  add_common(app.add_subcommand("gen-paths", "Emit the trajectory CSVs"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "sweep" && cmd->count("--rounds") == 0) spec.rounds = 30;
    apply_split(spec, split, name == "sweep");

    bool partial = false;
    if (name == "baseline") {
      partial = cmd_baseline(spec).any_diverged();
    } else if (name == "centralized") {
      partial = cmd_centralized(spec).any_diverged();
    } else if (name == "federated") {
      partial = cmd_federated(spec).any_diverged();
    } else if (name == "sweep") {
      const SweepResult result = cmd_epoch_sweep(spec);
      partial = std::any_of(result.cells.begin(), result.cells.end(),
                            [](const SweepCell& c) { return !std::isfinite(c.mean); });
    } else if (name == "local-vs-fed") {
      const LocalVsFedResult result = cmd_local_vs_fed(spec);
      partial = std::any_of(
          result.cells.begin(), result.cells.end(),
          [](const LocalVsFedCell& c) { return !std::isfinite(c.ratio); });
    } else if (name == "gen-paths") {
      cmd_gen_paths(spec);
    }
    if (partial) {
      std::cerr << "warning: some laps diverged; results are partial\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fedff
