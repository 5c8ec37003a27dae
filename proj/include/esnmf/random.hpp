#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "esnmf/sparse_matrix.hpp"

namespace esnmf {

/// Seeded generator with distribution helpers written out explicitly, so a
/// given seed yields the same stream with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(seed ^ (stream * 0x9E3779B97F4A7C15ULL)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_closed() { return 1.0 - uniform01(); }

  /// Uniform integer in [0, n); n > 0.
  Index uniform_index(Index n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return static_cast<Index>(x % bound);
  }

  /// Uniform integer in [lo, hi].
  Index uniform_between(Index lo, Index hi) { return lo + uniform_index(hi - lo + 1); }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace esnmf
