#include "fedff/neuralff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fedff/bytes.hpp"
#include "fedff/errors.hpp"
#include "fedff/rng.hpp"
#include "json.hpp"

namespace fedff {

namespace {

constexpr char kMagic[4] = {'F', 'F', 'N', 'N'};
constexpr std::uint16_t kVersion = 1;
// Power-iteration steps applied at initialization so the stored vectors start
// converged; training keeps them tracking with one step per batch.
constexpr int kInitPowerIterations = 30;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& x) {
  const double n = std::sqrt(dot(x, x)) + 1e-12;
  for (double& xi : x) xi /= n;
}

double sigma_estimate(const Mat& w, std::span<const double> u,
                      std::span<const double> v) {
  double s = 0.0;
  for (int r = 0; r < w.rows; ++r) {
    double wv = 0.0;
    for (int c = 0; c < w.cols; ++c) wv += w.at(r, c) * v[c];
    s += u[r] * wv;
  }
  return s;
}

double guard_sigma(double sigma) {
  return std::abs(sigma) < 1e-12 ? 1e-12 : sigma;
}

struct ForwardTrace {
  // inputs[l] is the input to layer l, pre[l] the pre-activation output.
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
  double output = 0.0;
};

ForwardTrace forward_trace(const MlpModel& model, double kappa, double v) {
  ForwardTrace trace;
  std::vector<double> x = {kappa, v};
  const int n_layers = static_cast<int>(model.layers.size());
  for (int l = 0; l < n_layers; ++l) {
    const Layer& layer = model.layers[l];
    const double sigma = guard_sigma(layer_sigma(layer));
    std::vector<double> y(layer.w.rows);
    for (int r = 0; r < layer.w.rows; ++r) {
      double s = layer.b[r];
      for (int c = 0; c < layer.w.cols; ++c) s += layer.w.at(r, c) / sigma * x[c];
      y[r] = s;
    }
    trace.inputs.push_back(std::move(x));
    trace.pre.push_back(y);
    if (l + 1 < n_layers)
      for (double& yi : y) yi = std::max(yi, 0.0);
    x = std::move(y);
  }
  trace.output = x[0];
  return trace;
}

}  // namespace

int MlpModel::parameter_count() const {
  int n = 0;
  for (const Layer& layer : layers)
    n += layer.w.rows * layer.w.cols + static_cast<int>(layer.b.size());
  return n;
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> flat;
  for (const Layer& layer : layers)
    flat.insert(flat.end(), layer.w.a.begin(), layer.w.a.end());
  for (const Layer& layer : layers)
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
  for (const Layer& layer : layers) {
    flat.insert(flat.end(), layer.sn_u.begin(), layer.sn_u.end());
    flat.insert(flat.end(), layer.sn_v.begin(), layer.sn_v.end());
  }
  return flat;
}

MlpModel MlpModel::unflatten(const std::vector<int>& dims,
                             std::span<const double> flat) {
  MlpModel model;
  model.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.w = Mat(dims[l + 1], dims[l]);
    layer.b.assign(dims[l + 1], 0.0);
    layer.sn_u.assign(dims[l + 1], 0.0);
    layer.sn_v.assign(dims[l], 0.0);
    model.layers.push_back(std::move(layer));
  }
  std::size_t off = 0;
  auto take = [&](double* dst, std::size_t n) {
    if (off + n > flat.size())
      throw ShapeMismatch("flat parameter vector too short for layer dims");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), n, dst);
    off += n;
  };
  for (Layer& layer : model.layers) take(layer.w.a.data(), layer.w.a.size());
  for (Layer& layer : model.layers) take(layer.b.data(), layer.b.size());
  for (Layer& layer : model.layers) {
    take(layer.sn_u.data(), layer.sn_u.size());
    take(layer.sn_v.data(), layer.sn_v.size());
  }
  if (off != flat.size())
    throw ShapeMismatch("flat parameter vector too long for layer dims");
  return model;
}

MlpModel init_model(int n_neurons, std::uint64_t seed) {
  if (n_neurons < 1)
    throw std::invalid_argument("init_model: n_neurons must be >= 1");
  MlpModel model;
  model.layer_dims = {2, n_neurons, n_neurons, 1};
  Rng rng(seed);

  for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
    Layer layer;
    const int rows = model.layer_dims[l + 1];
    const int cols = model.layer_dims[l];
    layer.w = Mat(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& wij : layer.w.a) wij = rng.uniform(-bound, bound);
    layer.b.assign(rows, 0.0);
    model.layers.push_back(std::move(layer));
  }
  for (Layer& layer : model.layers) {
    layer.sn_u.resize(layer.w.rows);
    layer.sn_v.resize(layer.w.cols);
    for (double& ui : layer.sn_u) ui = rng.normal();
    for (double& vi : layer.sn_v) vi = rng.normal();
    normalize(layer.sn_u);
    normalize(layer.sn_v);
    for (int it = 0; it < kInitPowerIterations; ++it) {
      SpectralResult sr = spectral_normalize(layer.w, layer.sn_u, layer.sn_v);
      layer.sn_u = std::move(sr.u);
      layer.sn_v = std::move(sr.v);
    }
  }
  return model;
}

double layer_sigma(const Layer& layer) {
  return sigma_estimate(layer.w, layer.sn_u, layer.sn_v);
}

double forward(const MlpModel& model, double kappa, double v) {
  return forward_trace(model, kappa, v).output;
}

SpectralResult spectral_normalize(const Mat& w, std::vector<double> u,
                                  std::vector<double> v) {
  // v <- normalize(W^T u)
  for (int c = 0; c < w.cols; ++c) {
    double s = 0.0;
    for (int r = 0; r < w.rows; ++r) s += w.at(r, c) * u[r];
    v[c] = s;
  }
  normalize(v);
  // u <- normalize(W v)
  for (int r = 0; r < w.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < w.cols; ++c) s += w.at(r, c) * v[c];
    u[r] = s;
  }
  normalize(u);

  SpectralResult result;
  result.sigma = sigma_estimate(w, u, v);
  result.normalized = w;
  const double sigma = guard_sigma(result.sigma);
  for (double& wij : result.normalized.a) wij /= sigma;
  result.u = std::move(u);
  result.v = std::move(v);
  return result;
}

double mse_loss(const MlpModel& model, std::span<const ClientSample> batch) {
  if (batch.empty()) throw EmptyBatch("mse_loss: empty batch");
  double loss = 0.0;
  for (const ClientSample& row : batch) {
    const double r = row.delta_a - forward(model, row.kappa_a, row.v_a);
    loss += r * r;
  }
  return loss / static_cast<double>(batch.size());
}

Gradient backward(const MlpModel& model, std::span<const ClientSample> batch) {
  if (batch.empty()) throw EmptyBatch("backward: empty batch");
  const int n_layers = static_cast<int>(model.layers.size());

  // Accumulate gradients in the normalized weights first.
  Gradient grad;
  std::vector<Mat> g_norm;
  for (const Layer& layer : model.layers) {
    grad.dw.emplace_back(layer.w.rows, layer.w.cols);
    grad.db.emplace_back(layer.b.size(), 0.0);
    g_norm.emplace_back(layer.w.rows, layer.w.cols);
  }

  const double scale = 2.0 / static_cast<double>(batch.size());
  for (const ClientSample& row : batch) {
    const ForwardTrace trace = forward_trace(model, row.kappa_a, row.v_a);
    std::vector<double> g = {scale * (trace.output - row.delta_a)};
    for (int l = n_layers - 1; l >= 0; --l) {
      const Layer& layer = model.layers[l];
      const double sigma = guard_sigma(layer_sigma(layer));
      // trace.inputs[l] is already the post-activation input of layer l.
      const std::vector<double>& x = trace.inputs[l];
      for (int r = 0; r < layer.w.rows; ++r) {
        grad.db[l][r] += g[r];
        for (int c = 0; c < layer.w.cols; ++c)
          g_norm[l].at(r, c) += g[r] * x[c];
      }
      if (l == 0) break;
      std::vector<double> g_prev(layer.w.cols, 0.0);
      for (int c = 0; c < layer.w.cols; ++c) {
        double s = 0.0;
        for (int r = 0; r < layer.w.rows; ++r) s += layer.w.at(r, c) / sigma * g[r];
        g_prev[c] = trace.pre[l - 1][c] > 0.0 ? s : 0.0;
      }
      g = std::move(g_prev);
    }
  }

  // Map d/dW_norm to d/dW through W_norm = W / sigma(W), sigma = u^T W v:
  // dL/dW = G/sigma - (<G, W>/sigma^2) u v^T.
  for (int l = 0; l < n_layers; ++l) {
    const Layer& layer = model.layers[l];
    const double sigma = guard_sigma(layer_sigma(layer));
    double inner = 0.0;
    for (std::size_t i = 0; i < layer.w.a.size(); ++i)
      inner += g_norm[l].a[i] * layer.w.a[i];
    const double coeff = inner / (sigma * sigma);
    for (int r = 0; r < layer.w.rows; ++r)
      for (int c = 0; c < layer.w.cols; ++c)
        grad.dw[l].at(r, c) =
            g_norm[l].at(r, c) / sigma - coeff * layer.sn_u[r] * layer.sn_v[c];
  }
  return grad;
}

MlpModel train_local(const MlpModel& model, const ClientDataset& data,
                     const TrainConfig& cfg) {
  if (data.rows.empty()) throw EmptyDataset("train_local: empty dataset");
  MlpModel out = model;
  if (cfg.epochs <= 0) return out;

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);

  // Adam moments for weights and biases, fresh for this call.
  Gradient m, v2;
  for (const Layer& layer : out.layers) {
    m.dw.emplace_back(layer.w.rows, layer.w.cols);
    m.db.emplace_back(layer.b.size(), 0.0);
    v2.dw.emplace_back(layer.w.rows, layer.w.cols);
    v2.db.emplace_back(layer.b.size(), 0.0);
  }
  long t = 0;

  const std::size_t bs = static_cast<std::size_t>(std::max(cfg.batch_size, 1));
  std::vector<ClientSample> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t stop = std::min(order.size(), start + bs);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data.rows[order[i]]);

      for (Layer& layer : out.layers) {
        SpectralResult sr = spectral_normalize(layer.w, layer.sn_u, layer.sn_v);
        layer.sn_u = std::move(sr.u);
        layer.sn_v = std::move(sr.v);
      }
      const Gradient grad = backward(out, batch);

      t += 1;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
      auto adam = [&](double& param, double& m_i, double& v_i, double g) {
        m_i = cfg.adam_beta1 * m_i + (1.0 - cfg.adam_beta1) * g;
        v_i = cfg.adam_beta2 * v_i + (1.0 - cfg.adam_beta2) * g * g;
        const double m_hat = m_i / bc1;
        const double v_hat = v_i / bc2;
        param -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
      };
      for (std::size_t l = 0; l < out.layers.size(); ++l) {
        Layer& layer = out.layers[l];
        for (std::size_t i = 0; i < layer.w.a.size(); ++i)
          adam(layer.w.a[i], m.dw[l].a[i], v2.dw[l].a[i], grad.dw[l].a[i]);
        for (std::size_t i = 0; i < layer.b.size(); ++i)
          adam(layer.b[i], m.db[l][i], v2.db[l][i], grad.db[l][i]);
      }
    }
  }
  return out;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& file) {
  std::string buf;
  buf.append(kMagic, 4);
  bytes::put_u16(buf, kVersion);
  bytes::put_u16(buf, static_cast<std::uint16_t>(model.layers.size()));
  for (const Layer& layer : model.layers) {
    bytes::put_u32(buf, static_cast<std::uint32_t>(layer.w.rows));
    bytes::put_u32(buf, static_cast<std::uint32_t>(layer.w.cols));
  }
  for (double x : model.flatten()) bytes::put_f64(buf, x);

  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + file.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

MlpModel load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + file.string());
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  bytes::Reader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size()};

  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw MalformedFrame("bad checkpoint magic");
  r.off = 4;
  if (r.u16() != kVersion) throw MalformedFrame("unsupported checkpoint version");
  const int n_layers = r.u16();
  if (n_layers < 1 || n_layers > 64) throw MalformedFrame("bad layer count");

  std::vector<int> dims;
  std::size_t flat_size = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    if (rows < 1 || cols < 1 || rows > 4096 || cols > 4096)
      throw MalformedFrame("bad layer shape");
    if (l == 0)
      dims.push_back(cols);
    else if (dims.back() != cols)
      throw MalformedFrame("inconsistent layer shapes");
    dims.push_back(rows);
    flat_size += static_cast<std::size_t>(rows) * cols + rows + rows + cols;
  }
  std::vector<double> flat(flat_size);
  for (double& x : flat) x = r.f64();
  if (r.off != r.n) throw MalformedFrame("trailing bytes in checkpoint");
  return MlpModel::unflatten(dims, flat);
}

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["layer_dims"] = model.layer_dims;
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  nlohmann::json sn = nlohmann::json::array();
  for (const Layer& layer : model.layers) {
    weights.push_back(layer.w.a);
    biases.push_back(layer.b);
    sn.push_back({{"u", layer.sn_u}, {"v", layer.sn_v}});
  }
  j["weights"] = weights;
  j["biases"] = biases;
  j["sn_vectors"] = sn;
  return j.dump(2);
}

MlpModel model_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const std::vector<int> dims = j.at("layer_dims").get<std::vector<int>>();
  std::vector<double> flat;
  for (const auto& w : j.at("weights"))
    for (const auto& x : w) flat.push_back(x.get<double>());
  for (const auto& b : j.at("biases"))
    for (const auto& x : b) flat.push_back(x.get<double>());
  for (const auto& s : j.at("sn_vectors")) {
    for (const auto& x : s.at("u")) flat.push_back(x.get<double>());
    for (const auto& x : s.at("v")) flat.push_back(x.get<double>());
  }
  return MlpModel::unflatten(dims, flat);
}

}  // namespace fedff
