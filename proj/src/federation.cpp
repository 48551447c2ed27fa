#include "fedff/federation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedff/bytes.hpp"
#include "fedff/errors.hpp"
#include "fedff/parallel.hpp"
#include "fedff/rng.hpp"

namespace fedff {

namespace {

constexpr char kUpdateMagic[4] = {'F', 'F', 'U', 'P'};
constexpr std::uint16_t kUpdateVersion = 1;

// Neumaier compensated sum; keeps the aggregate permutation-stable well below
// the 1e-15 contract.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

void renormalize_sn_segments(std::vector<double>& flat,
                             const std::vector<int>& dims) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    off += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  auto renorm = [&flat](std::size_t start, std::size_t len) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) norm2 += flat[start + i] * flat[start + i];
    const double norm = std::sqrt(norm2) + 1e-12;
    for (std::size_t i = 0; i < len; ++i) flat[start + i] /= norm;
  };
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    renorm(off, static_cast<std::size_t>(dims[l + 1]));
    off += static_cast<std::size_t>(dims[l + 1]);
    renorm(off, static_cast<std::size_t>(dims[l]));
    off += static_cast<std::size_t>(dims[l]);
  }
  if (off != flat.size())
    throw ShapeMismatch("fedavg: layer dims do not match parameter vector");
}

}  // namespace

std::vector<double> fedavg(const std::vector<ModelUpdate>& updates,
                           Weighting weighting,
                           const std::vector<int>& layer_dims) {
  if (updates.empty()) throw EmptyUpdateSet("fedavg: no updates");
  const std::size_t len = updates.front().params.size();
  std::uint64_t total_samples = 0;
  for (const ModelUpdate& u : updates) {
    if (u.params.size() != len)
      throw ShapeMismatch("fedavg: parameter vectors differ in length");
    total_samples += u.sample_count;
  }
  if (weighting == Weighting::kSampleWeighted && total_samples == 0)
    throw EmptyUpdateSet("fedavg: zero total sample count");

  std::vector<double> out(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    CompensatedSum acc;
    for (const ModelUpdate& u : updates) {
      const double w = weighting == Weighting::kSampleWeighted
                           ? static_cast<double>(u.sample_count) /
                                 static_cast<double>(total_samples)
                           : 1.0 / static_cast<double>(updates.size());
      acc.add(w * u.params[i]);
    }
    out[i] = acc.value();
  }
  if (!layer_dims.empty()) renormalize_sn_segments(out, layer_dims);
  return out;
}

std::vector<std::string> sample_clients(const std::vector<std::string>& pool,
                                        double fraction, int round,
                                        std::uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("sample_clients: empty pool");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("sample_clients: fraction must be in (0, 1]");

  std::vector<std::string> sorted = pool;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return client_index(a) < client_index(b);
  });
  const std::size_t want = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(sorted.size()) - 1e-12));
  if (want >= sorted.size()) return sorted;

  Rng rng(derive_seed(seed, 0x5a3c, static_cast<std::uint64_t>(round)));
  // Partial Fisher-Yates: the first `want` slots end up a uniform subset.
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.integer(sorted.size() - i));
    std::swap(sorted[i], sorted[j]);
  }
  sorted.resize(want);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return client_index(a) < client_index(b);
  });
  return sorted;
}

ModelUpdate client_task(const std::string& client_id, int round,
                        const std::vector<double>& global_params,
                        int local_epochs, const World& world,
                        ClientDataset* accumulator, ClientRoundStats* stats) {
  const ClientWorld& cw = world.clients.at(client_id);
  MlpModel local = MlpModel::unflatten(world.layer_dims, global_params);

  const LapLog lap = run_lap(cw.trajectory, FeedforwardSource::neural(local),
                             cw.gains, cw.vehicle);
  ClientDataset fresh = harvest_dataset(lap);
  const std::uint64_t gathered = fresh.rows.size();

  const ClientDataset* train_data = &fresh;
  if (accumulator != nullptr) {
    accumulator->client_id = client_id;
    accumulator->rows.insert(accumulator->rows.end(), fresh.rows.begin(),
                             fresh.rows.end());
    train_data = accumulator;
  }

  TrainConfig cfg = cw.train;
  cfg.epochs = local_epochs;
  cfg.rng_seed = derive_seed(world.master_seed, static_cast<std::uint64_t>(round) + 1,
                             static_cast<std::uint64_t>(client_index(client_id)));
  const MlpModel trained = train_local(local, *train_data, cfg);

  if (stats != nullptr) {
    stats->client_id = client_id;
    stats->train_loss = mse_loss(trained, train_data->rows);
    stats->sample_count = gathered;
    stats->lap_mte = mean_tracking_error(lap);
    stats->diverged = false;
  }

  ModelUpdate update;
  update.client_id = client_id;
  update.round = static_cast<std::uint32_t>(round);
  update.sample_count = gathered;
  update.params = trained.flatten();
  return update;
}

FederationResult run_federation(const FederationConfig& cfg,
                                const std::vector<std::string>& train_clients,
                                const std::vector<std::string>& test_clients,
                                const World& world) {
  for (const std::string& id : test_clients)
    if (std::find(train_clients.begin(), train_clients.end(), id) !=
        train_clients.end())
      throw std::invalid_argument("run_federation: train/test sets overlap");

  FederationResult result;
  result.model = init_model(cfg.n_neurons, derive_seed(cfg.rng_seed, 0x1217));
  std::vector<double> global = result.model.flatten();

  std::map<std::string, ClientDataset> accumulators;
  if (cfg.accumulate_data)
    for (const std::string& id : train_clients) accumulators[id] = {id, {}};

  for (int g = 0; g < cfg.rounds; ++g) {
    const std::vector<std::string> sampled =
        sample_clients(train_clients, cfg.client_fraction, g, cfg.rng_seed);

    std::vector<ModelUpdate> updates(sampled.size());
    std::vector<ClientRoundStats> stats(sampled.size());
    std::vector<char> ok(sampled.size(), 0);
    parallel_for(static_cast<int>(sampled.size()), cfg.workers, [&](int i) {
      const std::string& id = sampled[static_cast<std::size_t>(i)];
      ClientDataset* acc = cfg.accumulate_data ? &accumulators[id] : nullptr;
      try {
        updates[i] = client_task(id, g, global, cfg.local_epochs, world, acc,
                                 &stats[i]);
        ok[i] = 1;
      } catch (const Diverged&) {
        stats[i].client_id = id;
        stats[i].diverged = true;
      }
    });

    std::vector<ModelUpdate> valid;
    for (std::size_t i = 0; i < updates.size(); ++i)
      if (ok[i]) valid.push_back(std::move(updates[i]));
    if (valid.empty())
      throw AllClientsDiverged("round " + std::to_string(g) +
                               ": no client produced an update");

    global = fedavg(valid, cfg.weighting, world.layer_dims);
    result.model = MlpModel::unflatten(world.layer_dims, global);

    RoundReport report;
    report.round = g;
    report.clients = std::move(stats);
    for (const std::string& id : test_clients) {
      const ClientWorld& cw = world.clients.at(id);
      try {
        const LapLog lap = run_lap(cw.trajectory,
                                   FeedforwardSource::neural(result.model),
                                   cw.gains, cw.vehicle);
        report.test_mte[id] = mean_tracking_error(lap);
      } catch (const Diverged&) {
        report.test_mte[id] = std::numeric_limits<double>::infinity();
      }
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

std::vector<std::uint8_t> encode_update(const ModelUpdate& update) {
  std::string body;
  body.append(kUpdateMagic, 4);
  bytes::put_u16(body, kUpdateVersion);
  bytes::put_u32(body, static_cast<std::uint32_t>(client_index(update.client_id)));
  bytes::put_u32(body, update.round);
  bytes::put_u64(body, update.sample_count);
  bytes::put_u32(body, static_cast<std::uint32_t>(update.params.size()));
  for (double x : update.params) bytes::put_f64(body, x);

  std::string framed;
  bytes::put_u32(framed, static_cast<std::uint32_t>(body.size()));
  framed += body;
  return {framed.begin(), framed.end()};
}

ModelUpdate decode_update(std::span<const std::uint8_t> frame) {
  bytes::Reader r{frame.data(), frame.size()};
  const std::uint32_t body_len = r.u32();
  if (body_len != frame.size() - 4)
    throw MalformedFrame("update frame length mismatch");
  r.need(4);
  if (std::memcmp(frame.data() + r.off, kUpdateMagic, 4) != 0)
    throw MalformedFrame("bad update magic");
  r.off += 4;
  if (r.u16() != kUpdateVersion)
    throw MalformedFrame("unsupported update version");

  const std::uint32_t client = r.u32();
  if (client < 1 || client > client_ids().size())
    throw MalformedFrame("bad client index in update");

  ModelUpdate update;
  update.client_id = client_ids()[client - 1];
  update.round = r.u32();
  update.sample_count = r.u64();
  const std::uint32_t count = r.u32();
  update.params.resize(count);
  for (double& x : update.params) x = r.f64();
  if (r.off != r.n) throw MalformedFrame("trailing bytes in update frame");
  return update;
}

}  // namespace fedff
