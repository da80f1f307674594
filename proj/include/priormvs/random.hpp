#pragma once

#include <cstdint>
#include <random>

#include "priormvs/error.hpp"

namespace priormvs {

/// Deterministic random stream derived from a run seed and a stream counter.
/// Uniform variates are built from raw engine bits so sequences do not depend
/// on the standard library's distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  /// Stream for the `counter`-th independent consumer of a run seed.
  static RngStream derive(std::uint64_t seed, std::uint64_t counter) {
    return RngStream(seed, counter);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi]; returns lo when the interval is empty or a point.
  double uniform(double lo, double hi) {
    if (!(hi > lo)) return lo;
    const double x = lo + (hi - lo) * uniform01();
    return x > hi ? hi : x;
  }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw ArgumentError("cannot draw an index from an empty range");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace priormvs
