#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fedff {

// Dense row-major matrix, sized for the <= 10x10 layers used here.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// One fully connected layer plus its spectral-normalization power-iteration
// vectors (u left, v right, both unit norm).
struct Layer {
  Mat w;
  std::vector<double> b;
  std::vector<double> sn_u;
  std::vector<double> sn_v;
};

// Three-layer perceptron (kappa, v) -> steering angle with ReLU after the
// first two layers and spectral normalization on every weight matrix.
struct MlpModel {
  std::vector<int> layer_dims;  // {2, n, n, 1}
  std::vector<Layer> layers;

  int parameter_count() const;  // weights + biases + sn vectors
  // Flat layout: all weights (layer order, row-major), all biases, then all
  // sn vectors (u before v per layer). Matches the checkpoint byte order.
  std::vector<double> flatten() const;
  static MlpModel unflatten(const std::vector<int>& dims, std::span<const double> flat);
};

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 1;
  std::uint64_t rng_seed = 0;
};

struct ClientSample {
  double kappa_a;  // realized curvature [1/m]
  double v_a;      // realized speed [m/s]
  double delta_a;  // realized steering [rad]
};

struct ClientDataset {
  std::string client_id;
  std::vector<ClientSample> rows;
};

// Deterministic initialization: weights uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
// drawn from an mt19937_64 stream, biases zero, sn vectors random unit.
MlpModel init_model(int n_neurons, std::uint64_t seed);

// Inference with the stored power-iteration vectors held fixed.
double forward(const MlpModel& model, double kappa, double v);

struct SpectralResult {
  Mat normalized;
  std::vector<double> u;
  std::vector<double> v;
  double sigma = 0.0;
};

// One power-iteration step: v <- normalize(W^T u), u <- normalize(W v),
// sigma = u^T W v; returns W / sigma with the updated vectors.
SpectralResult spectral_normalize(const Mat& w, std::vector<double> u,
                                  std::vector<double> v);

// sigma = u^T W v with the layer's stored vectors.
double layer_sigma(const Layer& layer);

double mse_loss(const MlpModel& model, std::span<const ClientSample> batch);

struct Gradient {
  std::vector<Mat> dw;
  std::vector<std::vector<double>> db;
};

// Exact gradient of mse_loss in the weights and biases. The stored sn vectors
// are constants within the step; the normalization factor itself is
// differentiated with d(sigma)/dW = u v^T.
Gradient backward(const MlpModel& model, std::span<const ClientSample> batch);

// Mini-batch Adam over `epochs` passes with per-call moment state. Each batch
// first advances the power iteration one step, then applies one update. The
// input model is left untouched.
MlpModel train_local(const MlpModel& model, const ClientDataset& data,
                     const TrainConfig& cfg);

// Binary checkpoint: magic FFNN, version, layer shapes, then the flat
// parameter block as little-endian float64.
void save_checkpoint(const MlpModel& model, const std::filesystem::path& file);
MlpModel load_checkpoint(const std::filesystem::path& file);

// JSON mirror of the checkpoint for debugging.
std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

}  // namespace fedff
