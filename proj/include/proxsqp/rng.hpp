#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace proxsqp {

/// Counter-based generator: the k-th draw of stream `seed` is a pure function
/// of (seed, k), so results do not depend on draw order across threads or on
/// the standard library's distribution implementations.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits_at(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

  std::uint64_t next_bits() { return bits_at(counter_++); }

  /// Uniform on the open interval (0, 1), 53 random bits.
  double uniform() {
    const std::uint64_t b = next_bits() >> 11;
    return (static_cast<double>(b) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; both halves are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace proxsqp
