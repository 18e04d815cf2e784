#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace arnet {

/// Deterministic random source: std::mt19937_64 with portable conversions.
///
/// The standard distributions are implementation-defined, so uniform and
/// normal draws are derived from raw 64-bit engine outputs here. Identical
/// seeds and draw sequences give bitwise-identical values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive); multiply-shift mapping.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    __extension__ using u128 = unsigned __int128;
    const auto span = static_cast<u128>(hi - lo + 1);
    return lo + static_cast<std::int64_t>((span * next_u64()) >> 64);
  }

  /// Standard normal via the Box-Muller transform (one value per two draws).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent child seeds from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace arnet
