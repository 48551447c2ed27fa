// Acceptance runner: checks every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code 0 only if all criteria hold.
//
// The sweep criterion runs a reduced grid (schedule runs 1-3, G=10) by
// default; pass --full for the complete 10-run, G=30 grid.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fedff/control.hpp"
#include "fedff/errors.hpp"
#include "fedff/experiments.hpp"
#include "fedff/federation.hpp"
#include "fedff/neuralff.hpp"
#include "fedff/rng.hpp"
#include "fedff/trajgen.hpp"
#include "fedff/vehicle.hpp"
#include "support.hpp"

using namespace fedff;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass,
            const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << index << ": "
            << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

ExperimentSpec base_spec(const std::string& tag) {
  ExperimentSpec spec;
  spec.paths_dir = testsupport::paths_dir();
  spec.out_dir = testsupport::temp_dir("accept_" + tag);
  spec.master_seed = 42;
  return spec;
}

// Criteria 1 + 2: analytic feedforward dominates pure feedback and tracks
// almost perfectly on every client path.
void criteria_feedforward() {
  const ExperimentSpec spec = base_spec("baseline");
  const ResultTable table = cmd_baseline(spec);

  bool all_better = true;
  int strong_wins = 0;
  double worst_ff = 0.0;
  for (const std::string& id : client_ids()) {
    const double fb = table.mte(id, "fb");
    const double ff = table.mte(id, "fb_analytic");
    if (!(ff < fb)) all_better = false;
    if (ff < 0.25 * fb) ++strong_wins;
    worst_ff = std::max(worst_ff, ff);
  }
  report(1, "analytic feedforward beats pure feedback",
         all_better && strong_wins >= 9,
         "better on 12/12, <0.25x on " + std::to_string(strong_wins) + "/12");
  report(2, "analytic feedforward tracks within 0.02 m", worst_ff < 0.02,
         "worst MTE " + fmt(worst_ff) + " m");
}

// Criterion 3: analytic backward against central finite differences.
void criterion_gradients() {
  Rng rng(2024);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    MlpModel model = init_model(6, 1000 + draw);
    for (Layer& layer : model.layers)
      for (double& b : layer.b) b = rng.uniform(-0.2, 0.2);
    std::vector<ClientSample> batch;
    const int rows = 1 + static_cast<int>(rng.integer(6));
    for (int i = 0; i < rows; ++i)
      batch.push_back({rng.uniform(-1.4, 1.4), rng.uniform(0.1, 2.0),
                       rng.uniform(-0.3, 0.3)});

    const Gradient analytic = backward(model, batch);
    const Gradient numeric = testsupport::fd_gradient(model, batch, 1e-6);
    for (std::size_t l = 0; l < analytic.dw.size(); ++l) {
      for (std::size_t i = 0; i < analytic.dw[l].a.size(); ++i)
        worst = std::max(worst, testsupport::grad_rel_error(
                                    analytic.dw[l].a[i], numeric.dw[l].a[i]));
      for (std::size_t i = 0; i < analytic.db[l].size(); ++i)
        worst = std::max(worst, testsupport::grad_rel_error(
                                    analytic.db[l][i], numeric.db[l][i]));
    }
  }
  report(3, "backward matches finite differences", worst < 1e-5,
         "worst relative error " + fmt(worst));
}

// Criterion 4: spectral normalization bounds and the diagonal fixture.
void criterion_spectral(const MlpModel& trained) {
  double worst_sigma = 0.0;
  for (const Layer& layer : trained.layers) {
    const double sigma = layer_sigma(layer);
    Mat normalized = layer.w;
    for (double& x : normalized.a) x /= sigma;
    worst_sigma = std::max(worst_sigma, testsupport::top_singular_value(normalized));
  }

  Mat diag(2, 2);
  diag.at(0, 0) = 2.0;
  diag.at(1, 1) = 0.5;
  std::vector<double> u = {0.6, 0.8}, v = {0.6, 0.8};  // deliberately unconverged
  double sigma = 0.0;
  for (int it = 0; it < 50; ++it) {
    SpectralResult r = spectral_normalize(diag, u, v);
    u = r.u;
    v = r.v;
    sigma = r.sigma;
  }
  const bool fixture_ok = std::abs(sigma - 2.0) < 1e-9;
  report(4, "normalized layers stay contractive",
         worst_sigma <= 1.0 + 1e-3 && fixture_ok,
         "worst normalized sigma " + fmt(worst_sigma) + ", fixture sigma " +
             fmt(sigma));
}

// Criterion 5: the network recovers the plant inverse over the envelope.
struct RecoveryResult {
  MlpModel model;
  double worst_grid_error = 0.0;
};

RecoveryResult run_recovery() {
  const double wheelbase = VehicleParams{}.wheelbase;
  ClientDataset data;
  data.client_id = "oracle";
  for (int i = 0; i < 60; ++i) {
    const double kappa = -1.4 + 2.8 * i / 59.0;
    for (int j = 0; j < 20; ++j) {
      const double v = 0.1 + 1.9 * j / 19.0;
      data.rows.push_back({kappa, v, std::atan(kappa * wheelbase)});
    }
  }
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.rng_seed = 7;
  RecoveryResult result;
  result.model = train_local(init_model(10, 7), data, cfg);

  for (int i = 0; i < 50; ++i) {
    const double kappa = -1.4 + 2.8 * i / 49.0;
    for (int j = 0; j < 50; ++j) {
      const double v = 0.1 + 1.9 * j / 49.0;
      result.worst_grid_error =
          std::max(result.worst_grid_error,
                   std::abs(forward(result.model, kappa, v) -
                            std::atan(kappa * wheelbase)));
    }
  }
  return result;
}

// Criterion 6: aggregation arithmetic, exact to 1e-15.
void criterion_fedavg() {
  bool ok = true;
  std::string detail = "all exact";

  auto update_of = [](const char* id, std::uint64_t n, std::vector<double> p) {
    ModelUpdate u;
    u.client_id = id;
    u.sample_count = n;
    u.params = std::move(p);
    return u;
  };

  const std::vector<double> theta = {0.25, -3.5, 1.125};
  const auto idem = fedavg({update_of("I", 7, theta), update_of("II", 2, theta)},
                           Weighting::kSampleWeighted);
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (std::abs(idem[i] - theta[i]) > 1e-15) ok = false;

  const auto pair = fedavg({update_of("I", 3, {1.0, 2.0}), update_of("II", 1, {3.0, 4.0})},
                           Weighting::kSampleWeighted);
  if (std::abs(pair[0] - 1.5) > 1e-15 || std::abs(pair[1] - 2.5) > 1e-15) ok = false;

  Rng rng(99);
  std::vector<ModelUpdate> updates;
  for (int i = 0; i < 8; ++i) {
    std::vector<double> params(32);
    for (double& p : params) p = rng.uniform(-2.0, 2.0);
    updates.push_back(update_of(client_ids()[i].c_str(), 1 + rng.integer(400), params));
  }
  const auto forward_order = fedavg(updates, Weighting::kSampleWeighted);
  std::vector<ModelUpdate> reversed(updates.rbegin(), updates.rend());
  const auto reverse_order = fedavg(reversed, Weighting::kSampleWeighted);
  for (std::size_t i = 0; i < forward_order.size(); ++i) {
    if (std::abs(forward_order[i] - reverse_order[i]) > 1e-15) ok = false;
    double lo = 1e18, hi = -1e18;
    for (const ModelUpdate& u : updates) {
      lo = std::min(lo, u.params[i]);
      hi = std::max(hi, u.params[i]);
    }
    if (forward_order[i] < lo - 1e-15 || forward_order[i] > hi + 1e-15) ok = false;
  }

  report(6, "fedavg arithmetic and invariances", ok, detail);
}

// Criterion 7: federated proof of concept on the hold-out split.
void criterion_federated() {
  ExperimentSpec spec = base_spec("federated");
  spec.rounds = 5;
  spec.local_epochs = 1;
  const ResultTable table = cmd_federated(spec);

  bool fl_beats_fb = true;
  double fl_mean = 0.0, central_mean = 0.0;
  for (const std::string& id : {"I", "VI", "VIII", "XI"}) {
    const double fb = table.mte(id, "fb");
    const double fl = table.mte(id, "fb_fl");
    if (!(fl < fb)) fl_beats_fb = false;
    fl_mean += fl / 4.0;
    central_mean += table.mte(id, "fb_neural") / 4.0;
  }
  const bool similar = fl_mean <= 1.25 * central_mean;
  report(7, "federated model matches the centralized reference",
         fl_beats_fb && similar,
         "mean FL " + fmt(fl_mean) + " vs centralized " + fmt(central_mean));
}

// Criterion 8: sweep stability over rounds and epochs.
void criterion_sweep(bool full) {
  ExperimentSpec spec = base_spec("sweep");
  spec.rounds = full ? 30 : 10;
  spec.sweep_epochs = {1, 2, 5};
  spec.sweep_runs = full ? std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                         : std::vector<int>{1, 2, 3};
  spec.workers = 4;
  const SweepResult sweep = cmd_epoch_sweep(spec);

  bool stable = true;
  std::map<int, double> final_mean, final_std;
  for (int epochs : spec.sweep_epochs) {
    double min_mean = 1e18, last_mean = 0.0, last_std = 0.0;
    for (const SweepCell& cell : sweep.cells) {
      if (cell.epochs != epochs) continue;
      min_mean = std::min(min_mean, cell.mean);
      if (cell.round == spec.rounds) {
        last_mean = cell.mean;
        last_std = cell.stddev;
      }
    }
    if (!(last_mean <= 1.2 * min_mean)) stable = false;
    final_mean[epochs] = last_mean;
    final_std[epochs] = last_std;
  }
  const bool fewer_epochs_better =
      final_mean[1] <= final_mean[5] + final_std[5];
  report(8,
         full ? "sweep stays stable (full grid)" : "sweep stays stable (reduced grid)",
         stable && fewer_epochs_better,
         "final means E1/E2/E5 " + fmt(final_mean[1]) + "/" + fmt(final_mean[2]) +
             "/" + fmt(final_mean[5]));
}

// Criterion 9: no isolated client model generalizes like the federated one.
void criterion_local_vs_fed() {
  ExperimentSpec spec = base_spec("lvf");
  spec.rounds = 5;
  spec.local_epochs = 1;
  const LocalVsFedResult result = cmd_local_vs_fed(spec);

  std::map<std::string, int> wins;
  for (const LocalVsFedCell& cell : result.cells)
    if (cell.ratio < 1.0) wins[cell.local_client] += 1;
  int sweeps = 0;
  for (const auto& [client, count] : wins)
    if (count == 4) ++sweeps;
  report(9, "no local model wins on every test path", sweeps == 0,
         std::to_string(sweeps) + " local models sweep all four paths");
}

// Criterion 10: byte-level reproducibility and checkpoint round trip.
void criterion_determinism(const MlpModel& trained) {
  ExperimentSpec a = base_spec("det_a");
  ExperimentSpec b = base_spec("det_b");
  cmd_baseline(a);
  cmd_baseline(b);
  const bool baseline_same = testsupport::slurp(a.out_dir / "mte_fb_ff.csv") ==
                             testsupport::slurp(b.out_dir / "mte_fb_ff.csv");

  ExperimentSpec fa = base_spec("det_fed_a");
  fa.rounds = 1;
  ExperimentSpec fb = base_spec("det_fed_b");
  fb.rounds = 1;
  cmd_federated(fa);
  cmd_federated(fb);
  const bool federated_same =
      testsupport::slurp(fa.out_dir / "federated_mte.csv") ==
          testsupport::slurp(fb.out_dir / "federated_mte.csv") &&
      testsupport::slurp(fa.out_dir / "federated_rounds.csv") ==
          testsupport::slurp(fb.out_dir / "federated_rounds.csv");

  const auto dir = testsupport::temp_dir("accept_ckpt");
  save_checkpoint(trained, dir / "model.ffnn");
  const MlpModel back = load_checkpoint(dir / "model.ffnn");
  bool ckpt_same = back.flatten() == trained.flatten();
  for (double kappa : {-1.3, -0.4, 0.0, 0.7, 1.2})
    for (double v : {0.2, 1.0, 1.9})
      if (forward(back, kappa, v) != forward(trained, kappa, v)) ckpt_same = false;

  report(10, "same seed, same bytes", baseline_same && federated_same && ckpt_same,
         std::string("baseline ") + (baseline_same ? "ok" : "differs") +
             ", federated " + (federated_same ? "ok" : "differs") +
             ", checkpoint " + (ckpt_same ? "bit-exact" : "differs"));
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--full") == 0) full = true;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    criteria_feedforward();
    criterion_gradients();
    const RecoveryResult recovery = run_recovery();
    criterion_spectral(recovery.model);
    report(5, "trained network recovers arctan(kappa L)",
           recovery.worst_grid_error < 0.02,
           "max grid error " + fmt(recovery.worst_grid_error) + " rad");
    criterion_fedavg();
    criterion_federated();
    criterion_sweep(full);
    criterion_local_vs_fed();
    criterion_determinism(recovery.model);
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance aborted: " << e.what() << "\n";
    return 1;
  }
  const auto dt = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::steady_clock::now() - t0);

  std::cout << (g_failures == 0 ? "all criteria passed" : "criteria failed")
            << " in " << dt.count() << " s\n";
  return g_failures == 0 ? 0 : 1;
}
