#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace posetrans {

/// Deterministic random stream. The normal/uniform transforms are implemented
/// here (not via std::*_distribution) so that a given seed produces the same
/// byte-identical draw sequence on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_int(std::uint64_t bound) {
    // Modulo bias is negligible for the bounds used here (« 2^32).
    return next_u64() % bound;
  }

  /// Normal draw via Box-Muller. Consumes exactly two engine outputs, so the
  /// stream position after a call does not depend on the result.
  double normal(double mean, double stddev) {
    if (stddev == 0.0) {
      next_u64();
      next_u64();
      return mean;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard against log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return mean + stddev * radius * std::cos(theta);
  }

  /// Derives an independent stream seed from (base seed, stream id) with a
  /// splitmix64 finalizer; used to give each worker/instance its own stream.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace posetrans
