#pragma once

#include <cstdint>
#include <random>

namespace ncelab {

/// Seeded generator with a fixed output mapping. std::mt19937_64 is specified
/// bit-for-bit by the standard, but the std distributions are not; scaling raw
/// outputs directly keeps runs reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ncelab
