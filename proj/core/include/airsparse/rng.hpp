#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace airsparse {

// SplitMix64 (Steele, Lea & Flood 2014): 64-bit state advanced by the golden
// gamma 0x9E3779B97F4A7C15, output mixed with the Stafford "Mix13" finalizer.
// All derived draws below use integer arithmetic or the exact 53-bit
// mantissa mapping so that sequences reproduce on every platform; the normal
// draw additionally depends on libm log/cos.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Unbiased integer in [0, n), n > 0, by rejecting the low 2^64 mod n values.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x >= threshold) return x % n;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via the cosine branch of Box-Muller; consumes two draws.
  double normal() noexcept {
    const double u1 = static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

}  // namespace airsparse
