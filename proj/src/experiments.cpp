#include "fedff/experiments.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "fedff/errors.hpp"
#include "fedff/parallel.hpp"
#include "fedff/rng.hpp"
#include "json.hpp"

namespace fedff {

namespace {

// Seed stream tags fanned out from the master seed. World-level seeds feed
// per-(round, client) training streams inside client_task.
constexpr std::uint64_t kTagWorld = 1;
constexpr std::uint64_t kTagFederation = 2;
constexpr std::uint64_t kTagCentralized = 3;
constexpr std::uint64_t kTagSweep = 4;

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

void write_text_file(const std::filesystem::path& file, const std::string& text,
                     bool gzip) {
  if (gzip) {
    gzFile gz = gzopen(file.string().c_str(), "wb");
    if (gz == nullptr) throw IoError("cannot write " + file.string());
    if (gzwrite(gz, text.data(), static_cast<unsigned>(text.size())) !=
        static_cast<int>(text.size())) {
      gzclose(gz);
      throw IoError("short gzip write to " + file.string());
    }
    gzclose(gz);
    return;
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_meta(const std::filesystem::path& csv_file, const std::string& command,
                const ExperimentSpec& spec, const std::string& hash) {
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = spec.master_seed;
  j["rounds"] = spec.rounds;
  j["local_epochs"] = spec.local_epochs;
  j["weighting"] =
      spec.weighting == Weighting::kSampleWeighted ? "sample" : "uniform";
  j["accumulate_data"] = spec.accumulate_data;
  j["config_hash"] = hash;
  j["created_unix"] = static_cast<long long>(std::time(nullptr));
  std::filesystem::path meta = csv_file;
  meta += ".meta.json";
  std::ofstream out(meta, std::ios::binary);
  out << j.dump(2) << "\n";
}

std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
    return client_index(a) < client_index(b);
  });
  return ids;
}

double lap_mte_or_inf(const Trajectory& traj, const FeedforwardSource& ff,
                      const ControlGains& gains, const VehicleParams& params,
                      bool* diverged = nullptr) {
  try {
    const double mte = mean_tracking_error(run_lap(traj, ff, gains, params));
    if (diverged != nullptr) *diverged = false;
    return mte;
  } catch (const Diverged&) {
    if (diverged != nullptr) *diverged = true;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

FederationConfig federation_config(const ExperimentSpec& spec) {
  FederationConfig cfg;
  cfg.rounds = spec.rounds;
  cfg.local_epochs = spec.local_epochs;
  cfg.rng_seed = derive_seed(spec.master_seed, kTagFederation);
  cfg.weighting = spec.weighting;
  cfg.accumulate_data = spec.accumulate_data;
  cfg.workers = 1;  // rounds stay sequential; outer loops parallelize
  return cfg;
}

void write_table_csv(const ResultTable& table, const std::filesystem::path& file,
                     const ExperimentSpec& spec) {
  std::string text = "client,variant,mte,diverged\n";
  for (const ResultRow& row : table.rows) {
    text += row.client_id + "," + row.variant + "," + fmt_g(row.mte) + "," +
            (row.diverged ? "1" : "0") + "\n";
  }
  write_text_file(file, text, false);
  write_meta(file, table.command, spec, table.config_hash);
}

// Wide per-client layout used by the centralized and federated tables.
void write_wide_csv(const ResultTable& table,
                    const std::vector<std::string>& clients,
                    const std::vector<std::string>& variants,
                    const std::vector<std::string>& extra_names,
                    const std::vector<std::vector<std::string>>& extra_cols,
                    const std::filesystem::path& file,
                    const ExperimentSpec& spec) {
  std::string text = "client";
  for (const std::string& v : variants) text += ",mte_" + v;
  for (const std::string& name : extra_names) text += "," + name;
  text += "\n";
  for (std::size_t i = 0; i < clients.size(); ++i) {
    text += clients[i];
    for (const std::string& v : variants) text += "," + fmt_g(table.mte(clients[i], v));
    for (const auto& col : extra_cols) text += "," + col[i];
    text += "\n";
  }
  write_text_file(file, text, false);
  write_meta(file, table.command, spec, table.config_hash);
}

}  // namespace

double ResultTable::mte(const std::string& client, const std::string& variant) const {
  for (const ResultRow& row : rows)
    if (row.client_id == client && row.variant == variant) return row.mte;
  throw OutOfRange("no result for " + client + "/" + variant);
}

bool ResultTable::any_diverged() const {
  return std::any_of(rows.begin(), rows.end(),
                     [](const ResultRow& r) { return r.diverged; });
}

std::string config_hash(const ExperimentSpec& spec) {
  std::ostringstream canon;
  canon << spec.master_seed << "|" << spec.rounds << "|" << spec.local_epochs
        << "|" << (spec.weighting == Weighting::kSampleWeighted ? "s" : "u")
        << "|" << spec.accumulate_data;
  if (spec.split_run) canon << "|run=" << *spec.split_run;
  if (spec.split_test) {
    canon << "|test=";
    for (const auto& id : *spec.split_test) canon << id << ";";
  }
  canon << "|sweepE=";
  for (int e : spec.sweep_epochs) canon << e << ";";
  canon << "|sweepR=";
  for (int r : spec.sweep_runs) canon << r << ";";

  const std::string s = canon.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

World build_world(const ExperimentSpec& spec) {
  World world;
  world.master_seed = derive_seed(spec.master_seed, kTagWorld);
  const VehicleParams params;
  const ControlGains gains;
  TrainConfig train;

  for (const PathSpec& path : load_path_specs(spec.paths_dir)) {
    ClientWorld cw;
    cw.trajectory = generate_path(path, params.dt);
    cw.vehicle = params;
    cw.gains = gains;
    cw.train = train;
    world.clients.emplace(path.id, std::move(cw));
  }
  if (world.clients.empty())
    throw IoError("no path specs found under " + spec.paths_dir.string());
  return world;
}

std::pair<std::vector<std::string>, std::vector<std::string>> resolve_split(
    const ExperimentSpec& spec) {
  std::vector<std::string> test;
  if (spec.split_test) {
    test = sorted_ids(*spec.split_test);
    for (const auto& id : test) client_index(id);  // validates
  } else if (spec.split_run) {
    test = split_schedule(*spec.split_run).test;
  } else {
    test = {"I", "VI", "VIII", "XI"};
  }
  std::vector<std::string> train;
  for (const std::string& id : client_ids())
    if (std::find(test.begin(), test.end(), id) == test.end()) train.push_back(id);
  return {train, test};
}

MlpModel train_centralized(const World& world,
                           const std::vector<std::string>& train_clients,
                           std::uint64_t seed, int epochs) {
  ClientDataset pooled;
  pooled.client_id = "central";
  for (const std::string& id : sorted_ids(train_clients)) {
    const ClientWorld& cw = world.clients.at(id);
    const LapLog lap = run_lap(cw.trajectory, FeedforwardSource::analytic(cw.vehicle),
                               cw.gains, cw.vehicle);
    const ClientDataset rows = harvest_dataset(lap);
    pooled.rows.insert(pooled.rows.end(), rows.rows.begin(), rows.rows.end());
  }

  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.rng_seed = derive_seed(seed, 2);
  const MlpModel fresh = init_model(10, derive_seed(seed, 1));
  return train_local(fresh, pooled, cfg);
}

ResultTable cmd_baseline(const ExperimentSpec& spec) {
  const World world = build_world(spec);

  ResultTable table;
  table.command = "baseline";
  table.seed = spec.master_seed;
  table.rounds = spec.rounds;
  table.local_epochs = spec.local_epochs;
  table.config_hash = config_hash(spec);

  for (const std::string& id : client_ids()) {
    const auto it = world.clients.find(id);
    if (it == world.clients.end()) continue;
    const ClientWorld& cw = it->second;
    for (const auto& [variant, ff] :
         {std::pair<std::string, FeedforwardSource>{"fb", FeedforwardSource::none()},
          {"fb_analytic", FeedforwardSource::analytic(cw.vehicle)}}) {
      ResultRow row;
      row.client_id = id;
      row.variant = variant;
      row.mte = lap_mte_or_inf(cw.trajectory, ff, cw.gains, cw.vehicle, &row.diverged);
      table.rows.push_back(row);
    }
  }

  std::filesystem::create_directories(spec.out_dir);
  write_table_csv(table, spec.out_dir / "mte_fb_ff.csv", spec);
  return table;
}

namespace {

// Shared by the centralized and federated commands so both report identical
// reference columns for the same seed.
ResultTable reference_columns(const ExperimentSpec& spec, const World& world,
                              const std::vector<std::string>& test_clients,
                              const MlpModel& centralized,
                              const std::string& command) {
  ResultTable table;
  table.command = command;
  table.seed = spec.master_seed;
  table.rounds = spec.rounds;
  table.local_epochs = spec.local_epochs;
  table.config_hash = config_hash(spec);

  for (const std::string& id : test_clients) {
    const ClientWorld& cw = world.clients.at(id);
    const std::vector<std::pair<std::string, FeedforwardSource>> variants = {
        {"fb", FeedforwardSource::none()},
        {"fb_analytic", FeedforwardSource::analytic(cw.vehicle)},
        {"fb_neural", FeedforwardSource::neural(centralized)},
    };
    for (const auto& [variant, ff] : variants) {
      ResultRow row;
      row.client_id = id;
      row.variant = variant;
      row.mte = lap_mte_or_inf(cw.trajectory, ff, cw.gains, cw.vehicle, &row.diverged);
      table.rows.push_back(row);
    }
  }
  return table;
}

// Short laps gather little data; flag them the way the analysis calls them
// out instead of holding them to the fitted-model bound.
std::vector<std::string> low_data_flags(const World& world,
                                        const std::vector<std::string>& clients) {
  std::vector<std::string> flags;
  for (const std::string& id : clients) {
    const double duration = world.clients.at(id).trajectory.duration;
    flags.push_back(duration < 15.0 ? "1" : "0");
  }
  return flags;
}

}  // namespace

ResultTable cmd_centralized(const ExperimentSpec& spec) {
  const World world = build_world(spec);
  const auto [train_clients, test_clients] = resolve_split(spec);

  const MlpModel model = train_centralized(
      world, train_clients, derive_seed(spec.master_seed, kTagCentralized));
  ResultTable table =
      reference_columns(spec, world, test_clients, model, "centralized");

  std::filesystem::create_directories(spec.out_dir);
  write_wide_csv(table, test_clients, {"fb", "fb_analytic", "fb_neural"},
                 {"low_data"}, {low_data_flags(world, test_clients)},
                 spec.out_dir / "centralized_mte.csv", spec);
  return table;
}

ResultTable cmd_federated(const ExperimentSpec& spec) {
  const World world = build_world(spec);
  const auto [train_clients, test_clients] = resolve_split(spec);

  const MlpModel centralized = train_centralized(
      world, train_clients, derive_seed(spec.master_seed, kTagCentralized));
  ResultTable table =
      reference_columns(spec, world, test_clients, centralized, "federated");

  const FederationConfig cfg = federation_config(spec);
  const FederationResult fed =
      run_federation(cfg, train_clients, test_clients, world);

  for (const std::string& id : test_clients) {
    const ClientWorld& cw = world.clients.at(id);
    ResultRow row;
    row.client_id = id;
    row.variant = "fb_fl";
    row.mte = lap_mte_or_inf(cw.trajectory, FeedforwardSource::neural(fed.model),
                             cw.gains, cw.vehicle, &row.diverged);
    table.rows.push_back(row);
  }

  std::filesystem::create_directories(spec.out_dir);
  write_wide_csv(table, test_clients, {"fb", "fb_analytic", "fb_neural", "fb_fl"},
                 {}, {}, spec.out_dir / "federated_mte.csv", spec);

  // Per-round log: training stats and post-aggregation test errors.
  std::string rounds_csv = "round,client,kind,lap_mte,train_loss,sample_count\n";
  for (const RoundReport& report : fed.reports) {
    for (const ClientRoundStats& cs : report.clients) {
      rounds_csv += std::to_string(report.round) + "," + cs.client_id + ",train," +
                    fmt_g(cs.diverged ? std::numeric_limits<double>::quiet_NaN()
                                      : cs.lap_mte) +
                    "," + fmt_g(cs.train_loss) + "," +
                    std::to_string(cs.sample_count) + "\n";
    }
    for (const std::string& id : test_clients)
      rounds_csv += std::to_string(report.round) + "," + id + ",test," +
                    fmt_g(report.test_mte.at(id)) + ",nan,0\n";
  }
  const std::filesystem::path rounds_file = spec.out_dir / "federated_rounds.csv";
  write_text_file(rounds_file, rounds_csv, false);
  write_meta(rounds_file, "federated", spec, table.config_hash);

  // Test-lap trajectory logs for every controller variant.
  for (const std::string& id : test_clients) {
    const ClientWorld& cw = world.clients.at(id);
    const std::vector<std::pair<std::string, FeedforwardSource>> variants = {
        {"fb", FeedforwardSource::none()},
        {"fb_analytic", FeedforwardSource::analytic(cw.vehicle)},
        {"fb_neural", FeedforwardSource::neural(centralized)},
        {"fb_fl", FeedforwardSource::neural(fed.model)},
    };
    for (const auto& [variant, ff] : variants) {
      std::ostringstream lap_csv;
      try {
        write_lap_csv(run_lap(cw.trajectory, ff, cw.gains, cw.vehicle), lap_csv);
      } catch (const Diverged&) {
        lap_csv.str("t,x,y,psi,v,delta,eps_x,eps_y,u_delta,u_v,kappa_a\n");
      }
      const std::string ext = spec.gzip_logs ? ".csv.gz" : ".csv";
      write_text_file(spec.out_dir / ("traj_" + id + "_" + variant + ext),
                      lap_csv.str(), spec.gzip_logs);
    }
  }
  return table;
}

SweepResult cmd_epoch_sweep(const ExperimentSpec& spec) {
  const World base_world = build_world(spec);

  struct Job {
    int epochs;
    int run;
  };
  std::vector<Job> jobs;
  for (int e : spec.sweep_epochs)
    for (int r : spec.sweep_runs) jobs.push_back({e, r});

  // per job, per round: mean test MTE
  std::vector<std::vector<double>> curves(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), spec.workers, [&](int ji) {
    const Job& job = jobs[static_cast<std::size_t>(ji)];
    const SplitSchedule split = split_schedule(job.run);

    World world = base_world;
    world.master_seed = derive_seed(spec.master_seed, kTagSweep,
                                    static_cast<std::uint64_t>(job.run * 16 + job.epochs));
    FederationConfig cfg = federation_config(spec);
    cfg.local_epochs = job.epochs;
    cfg.rng_seed = derive_seed(world.master_seed, kTagFederation);

    const FederationResult fed = run_federation(cfg, split.train, split.test, world);
    std::vector<double>& curve = curves[static_cast<std::size_t>(ji)];
    for (const RoundReport& report : fed.reports) {
      double sum = 0.0;
      for (const auto& [id, mte] : report.test_mte) sum += mte;
      curve.push_back(sum / static_cast<double>(report.test_mte.size()));
    }
  });

  SweepResult result;
  result.config_hash = config_hash(spec);
  const int n_runs = static_cast<int>(spec.sweep_runs.size());
  for (std::size_t ei = 0; ei < spec.sweep_epochs.size(); ++ei) {
    for (int g = 0; g < spec.rounds; ++g) {
      double mean = 0.0;
      for (int r = 0; r < n_runs; ++r)
        mean += curves[ei * n_runs + r][static_cast<std::size_t>(g)];
      mean /= n_runs;
      double var = 0.0;
      for (int r = 0; r < n_runs; ++r) {
        const double d = curves[ei * n_runs + r][static_cast<std::size_t>(g)] - mean;
        var += d * d;
      }
      const double stddev = n_runs > 1 ? std::sqrt(var / (n_runs - 1)) : 0.0;
      result.cells.push_back({spec.sweep_epochs[ei], g + 1, mean, stddev});
    }
  }

  std::filesystem::create_directories(spec.out_dir);
  std::string text = "epochs,round,mte_mean,mte_std\n";
  for (const SweepCell& c : result.cells)
    text += std::to_string(c.epochs) + "," + std::to_string(c.round) + "," +
            fmt_g(c.mean) + "," + fmt_g(c.stddev) + "\n";
  const std::filesystem::path file = spec.out_dir / "epoch_sweep.csv";
  write_text_file(file, text, false);
  write_meta(file, "sweep", spec, result.config_hash);
  return result;
}

LocalVsFedResult cmd_local_vs_fed(const ExperimentSpec& spec) {
  const World world = build_world(spec);
  const auto [train_clients, test_clients] = resolve_split(spec);

  // Federated reference, same seeds as cmd_federated.
  const FederationConfig cfg = federation_config(spec);
  const FederationResult fed =
      run_federation(cfg, train_clients, test_clients, world);
  std::map<std::string, double> fed_mte;
  for (const std::string& id : test_clients) {
    const ClientWorld& cw = world.clients.at(id);
    fed_mte[id] = lap_mte_or_inf(cw.trajectory, FeedforwardSource::neural(fed.model),
                                 cw.gains, cw.vehicle);
  }

  // Isolated training with the federated budget: same initial model, G rounds
  // of fresh lap + E epochs, zero communication.
  const MlpModel initial = init_model(cfg.n_neurons, derive_seed(cfg.rng_seed, 0x1217));
  std::vector<std::vector<LocalVsFedCell>> by_client(train_clients.size());
  parallel_for(static_cast<int>(train_clients.size()), spec.workers, [&](int ci) {
    const std::string& id = train_clients[static_cast<std::size_t>(ci)];
    std::vector<double> params = initial.flatten();
    ClientDataset accumulator;
    for (int g = 0; g < cfg.rounds; ++g) {
      const ModelUpdate update =
          client_task(id, g, params, cfg.local_epochs, world,
                      cfg.accumulate_data ? &accumulator : nullptr);
      params = update.params;
    }
    const MlpModel local = MlpModel::unflatten(world.layer_dims, params);
    for (const std::string& test_id : test_clients) {
      const ClientWorld& cw = world.clients.at(test_id);
      LocalVsFedCell cell;
      cell.local_client = id;
      cell.test_client = test_id;
      cell.mte_local = lap_mte_or_inf(cw.trajectory, FeedforwardSource::neural(local),
                                      cw.gains, cw.vehicle);
      cell.mte_fed = fed_mte.at(test_id);
      cell.ratio = cell.mte_local / cell.mte_fed;
      by_client[static_cast<std::size_t>(ci)].push_back(cell);
    }
  });

  LocalVsFedResult result;
  result.config_hash = config_hash(spec);
  for (const auto& cells : by_client)
    result.cells.insert(result.cells.end(), cells.begin(), cells.end());

  std::filesystem::create_directories(spec.out_dir);
  std::string text = "local_client,test_client,mte_local,mte_fed,ratio\n";
  for (const LocalVsFedCell& c : result.cells)
    text += c.local_client + "," + c.test_client + "," + fmt_g(c.mte_local) + "," +
            fmt_g(c.mte_fed) + "," + fmt_g(c.ratio) + "\n";
  const std::filesystem::path file = spec.out_dir / "local_vs_fed_ratio.csv";
  write_text_file(file, text, false);
  write_meta(file, "local-vs-fed", spec, result.config_hash);
  return result;
}

void cmd_gen_paths(const ExperimentSpec& spec) {
  const VehicleParams params;
  std::filesystem::create_directories(spec.out_dir);
  for (const PathSpec& path : load_path_specs(spec.paths_dir)) {
    const Trajectory traj = generate_path(path, params.dt);
    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    write_text_file(spec.out_dir / ("trajectory_" + path.id + ".csv"), csv.str(),
                    false);
  }
}

}  // namespace fedff
