#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "infoclip/errors.hpp"

namespace infoclip {

/// One splitmix64 step. Advances the state and returns the mixed output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Decorrelated child seed for a named stream of a base seed, so that e.g.
/// scene generation and parameter init never share a generator sequence.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xBF58476D1CE4E5B9ull * (stream + 1));
  return splitmix64_next(s);
}

/// Deterministic generator with explicitly spelled-out real-valued draws.
/// mt19937_64 output is fixed by the standard, the uniform mapping is
/// (x >> 11) * 2^-53, and gaussians come from Box-Muller, so a seed pins the
/// exact double sequence independent of library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform draw in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw InputError("Rng::uniform: empty interval");
    return lo + (hi - lo) * uniform();
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased integer in [0, n) by rejection.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw InputError("Rng::uniform_index: n must be positive");
    if (n == 1) return 0;
    const std::uint64_t m = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % m);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace infoclip
