#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fedff/neuralff.hpp"

// Test-only oracles, independent of the library code paths they check.

namespace testsupport {

// Top singular value via Jacobi eigen-iteration on W^T W. Independent of the
// power-iteration route used by the library.
inline double top_singular_value(const fedff::Mat& w) {
  const int n = w.cols;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < w.rows; ++r) s += w.at(r, i) * w.at(r, j);
      a[static_cast<std::size_t>(i) * n + j] = s;
    }

  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        const double theta = 0.5 * std::atan2(2.0 * at(p, q), at(q, q) - at(p, p));
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double lambda_max = 0.0;
  for (int i = 0; i < n; ++i) lambda_max = std::max(lambda_max, at(i, i));
  return std::sqrt(std::max(0.0, lambda_max));
}

// Central finite differences of mse_loss in every weight and bias.
inline fedff::Gradient fd_gradient(const fedff::MlpModel& model,
                                   std::span<const fedff::ClientSample> batch,
                                   double h = 1e-6) {
  fedff::Gradient grad;
  fedff::MlpModel probe = model;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const fedff::Layer& layer = model.layers[l];
    grad.dw.emplace_back(layer.w.rows, layer.w.cols);
    grad.db.emplace_back(layer.b.size(), 0.0);
    for (std::size_t i = 0; i < layer.w.a.size(); ++i) {
      const double orig = probe.layers[l].w.a[i];
      probe.layers[l].w.a[i] = orig + h;
      const double up = fedff::mse_loss(probe, batch);
      probe.layers[l].w.a[i] = orig - h;
      const double dn = fedff::mse_loss(probe, batch);
      probe.layers[l].w.a[i] = orig;
      grad.dw[l].a[i] = (up - dn) / (2.0 * h);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      const double orig = probe.layers[l].b[i];
      probe.layers[l].b[i] = orig + h;
      const double up = fedff::mse_loss(probe, batch);
      probe.layers[l].b[i] = orig - h;
      const double dn = fedff::mse_loss(probe, batch);
      probe.layers[l].b[i] = orig;
      grad.db[l][i] = (up - dn) / (2.0 * h);
    }
  }
  return grad;
}

// Guarded relative error: relative where the gradient has magnitude,
// absolute-like near zero so finite-difference noise cannot dominate.
inline double grad_rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / denom;
}

inline std::filesystem::path paths_dir() {
#ifdef FEDFF_PATHS_DIR
  return FEDFF_PATHS_DIR;
#else
  return "paths";
#endif
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("fedff_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace testsupport
