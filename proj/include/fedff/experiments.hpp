#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedff/federation.hpp"

namespace fedff {

// Shared knobs for the experiment commands. Split resolution order: explicit
// test-client list, then a schedule run index, then the default proof-of-
// concept hold-out {I, VI, VIII, XI}.
struct ExperimentSpec {
  std::filesystem::path paths_dir = "paths";
  std::filesystem::path out_dir = "out";
  std::uint64_t master_seed = 42;
  int rounds = 5;
  int local_epochs = 1;
  std::optional<int> split_run;
  std::optional<std::vector<std::string>> split_test;
  std::vector<int> sweep_runs = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> sweep_epochs = {1, 2, 5};
  Weighting weighting = Weighting::kSampleWeighted;
  bool accumulate_data = false;
  int workers = 1;
  bool gzip_logs = false;
};

struct ResultRow {
  std::string client_id;
  std::string variant;  // fb, fb_analytic, fb_neural, fb_fl
  double mte = 0.0;
  bool diverged = false;
};

struct ResultTable {
  std::string command;
  std::vector<ResultRow> rows;
  std::uint64_t seed = 0;
  int rounds = 0;
  int local_epochs = 0;
  std::string config_hash;

  double mte(const std::string& client, const std::string& variant) const;
  bool any_diverged() const;
};

struct SweepCell {
  int epochs = 0;
  int round = 0;       // 1-based communication round
  double mean = 0.0;   // mean test MTE across runs
  double stddev = 0.0; // sample standard deviation across runs
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string config_hash;
};

struct LocalVsFedCell {
  std::string local_client;
  std::string test_client;
  double mte_local = 0.0;
  double mte_fed = 0.0;
  double ratio = 0.0;
};

struct LocalVsFedResult {
  std::vector<LocalVsFedCell> cells;
  std::string config_hash;
};

// Loads the path specs, generates every trajectory, and assembles the client
// worlds with the default plant parameters and gains.
World build_world(const ExperimentSpec& spec);

// Train/test client ids for the spec, both ordered I..XII.
std::pair<std::vector<std::string>, std::vector<std::string>> resolve_split(
    const ExperimentSpec& spec);

// Centralized reference: analytic-feedforward laps over the training clients
// pooled into one dataset, then a fresh model trained for `epochs` passes.
MlpModel train_centralized(const World& world,
                           const std::vector<std::string>& train_clients,
                           std::uint64_t seed, int epochs = 5);

// FB vs FB+analytic over all twelve clients; writes mte_fb_ff.csv.
ResultTable cmd_baseline(const ExperimentSpec& spec);

// Centralized neural feedforward on the split's test clients; writes
// centralized_mte.csv.
ResultTable cmd_centralized(const ExperimentSpec& spec);

// Federated proof of concept; writes federated_mte.csv, federated_rounds.csv
// and per-variant test lap logs.
ResultTable cmd_federated(const ExperimentSpec& spec);

// Round-by-round sweep over local epochs and schedule runs; writes
// epoch_sweep.csv.
SweepResult cmd_epoch_sweep(const ExperimentSpec& spec);

// Isolated per-client training against the federated reference; writes
// local_vs_fed_ratio.csv.
LocalVsFedResult cmd_local_vs_fed(const ExperimentSpec& spec);

// Emits trajectory_<id>.csv for every configured path.
void cmd_gen_paths(const ExperimentSpec& spec);

// FNV-1a content hash of the spec fields, hex encoded.
std::string config_hash(const ExperimentSpec& spec);

int run_cli(int argc, char** argv);

}  // namespace fedff
