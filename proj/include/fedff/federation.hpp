#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedff/control.hpp"
#include "fedff/neuralff.hpp"
#include "fedff/trajgen.hpp"
#include "fedff/vehicle.hpp"

namespace fedff {

// Serializable client contribution for one communication round.
struct ModelUpdate {
  std::string client_id;
  std::uint32_t round = 0;
  std::uint64_t sample_count = 0;  // rows gathered this round
  std::vector<double> params;      // flat, checkpoint layout order
};

enum class Weighting { kSampleWeighted, kUniform };

struct FederationConfig {
  int rounds = 5;                // G
  int local_epochs = 1;          // E
  double client_fraction = 1.0;  // participation per round
  std::uint64_t rng_seed = 0;
  Weighting weighting = Weighting::kSampleWeighted;
  bool accumulate_data = false;  // keep lap data across rounds
  int n_neurons = 10;
  int workers = 1;  // parallel client tasks per round
};

struct ClientRoundStats {
  std::string client_id;
  double train_loss = 0.0;  // dataset MSE after local training
  std::uint64_t sample_count = 0;
  double lap_mte = 0.0;
  bool diverged = false;
};

struct RoundReport {
  int round = 0;
  std::vector<ClientRoundStats> clients;
  std::map<std::string, double> test_mte;  // per test client, post-aggregation
};

// Coordinate-wise weighted mean of the update parameter vectors. When
// layer_dims is supplied, the sn-vector segments are re-normalized to unit
// length per layer after averaging. Throws EmptyUpdateSet / ShapeMismatch.
std::vector<double> fedavg(const std::vector<ModelUpdate>& updates,
                           Weighting weighting,
                           const std::vector<int>& layer_dims = {});

// Deterministic per (seed, round) subset of ceil(fraction * |pool|) clients;
// fraction 1 returns the pool in sorted order.
std::vector<std::string> sample_clients(const std::vector<std::string>& pool,
                                        double fraction, int round,
                                        std::uint64_t seed);

// Everything one client needs to run its task.
struct ClientWorld {
  Trajectory trajectory;
  VehicleParams vehicle;
  ControlGains gains;
  TrainConfig train;  // epochs and rng_seed overridden per round
};

struct World {
  std::map<std::string, ClientWorld> clients;
  std::uint64_t master_seed = 0;
  std::vector<int> layer_dims = {2, 10, 10, 1};  // federation model topology
};

// One ClientTask: load the global parameters, drive a lap with the neural
// feedforward, harvest the lap rows (appended to *accumulator when data
// accumulation is on), train locally, and return the update. Propagates
// Diverged from the lap.
ModelUpdate client_task(const std::string& client_id, int round,
                        const std::vector<double>& global_params,
                        int local_epochs, const World& world,
                        ClientDataset* accumulator = nullptr,
                        ClientRoundStats* stats = nullptr);

struct FederationResult {
  MlpModel model;
  std::vector<RoundReport> reports;
};

// Full federated loop: init, G rounds of sample / client tasks / fedavg, test
// evaluation after every aggregation. Diverged clients are skipped; a round
// with zero surviving updates throws AllClientsDiverged.
FederationResult run_federation(const FederationConfig& cfg,
                                const std::vector<std::string>& train_clients,
                                const std::vector<std::string>& test_clients,
                                const World& world);

// Wire format: u32 frame length, magic FFUP, u16 version, u32 client id,
// u32 round, u64 sample count, u32 param count, then params as LE float64.
std::vector<std::uint8_t> encode_update(const ModelUpdate& update);
ModelUpdate decode_update(std::span<const std::uint8_t> frame);

}  // namespace fedff
