#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fedff {

// Deterministic random streams. std::mt19937_64 is fully specified by the
// standard, but the std distributions are not, so every draw that feeds a
// result goes through the hand-rolled mappings below. Same seed, same bytes,
// on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no caching; two uniforms per draw).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Uniform integer in [0, bound). Modulo bias is negligible for the bounds
  // used here (dataset sizes, client counts).
  std::uint64_t integer(std::uint64_t bound) { return engine_() % bound; }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(integer(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Counter-based seed derivation: sub-streams are a pure function of
// (master, a, b), so adding clients or rounds never perturbs the others.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t h = detail::splitmix64(master);
  h = detail::splitmix64(h ^ detail::splitmix64(a));
  h = detail::splitmix64(h ^ detail::splitmix64(b));
  return h;
}

}  // namespace fedff
