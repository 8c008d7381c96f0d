#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace portanet {

/// Seeded generator whose outputs are identical on every standard library.
///
/// std::mt19937 is fully specified by the standard, but the distributions
/// layered on top of it are not, so the conversions live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}

  /// Uniform in [0, 1) with 24 random mantissa bits.
  float uniform01() { return static_cast<float>(engine_() >> 8) * (1.0f / 16777216.0f); }

  /// Uniform in [lo, hi).
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n), by rejection.
  std::uint32_t below(std::uint32_t n) {
    const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
    std::uint32_t x;
    do {
      x = static_cast<std::uint32_t>(engine_());
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = below(static_cast<std::uint32_t>(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937 engine_;
};

}  // namespace portanet
