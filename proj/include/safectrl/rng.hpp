#pragma once

#include <cstdint>

namespace safectrl {

/// SplitMix64: tiny, portable, reproducible across platforms. All seeded
/// randomness in the workbench goes through this, never std:: distributions,
/// so artifacts are byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0,n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace safectrl
