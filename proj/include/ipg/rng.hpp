#pragma once

#include <cstdint>
#include <vector>

namespace ipg {

/// Deterministic RNG with identical output on every platform.
/// splitmix64 core; all draws are defined in terms of raw 64-bit outputs so
/// results never depend on library-specific distribution code.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Derives an independent stream for a named purpose.
  Rng fork(uint64_t stream) const {
    Rng r(state_ ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull));
    r.next();
    return r;
  }

  /// Fisher-Yates shuffle, deterministic under this generator.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace ipg
