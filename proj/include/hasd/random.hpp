#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hasd {

/// Seedable generator whose output is identical on every conforming
/// platform. std::mt19937_64's sequence is fixed by the standard; the
/// distributions below are written out by hand because the standard
/// library ones are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double prob) { return uniform() < prob; }

  /// Standard normal via the Box-Muller cosine branch.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hasd
