#pragma once

#include <cmath>
#include <cstdint>

#include "survlab/numeric.hpp"

namespace survlab {

// Counter-based generator: draw i is mix64(seed + i * GOLDEN), where mix64 is
// the SplitMix64 finalizer. Stateless apart from the counter, so replicate
// streams (seed + k) and resumed runs reproduce the exact same sequence on
// any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    counter_ += 1;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1), both endpoints excluded; safe for log transforms.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // index in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  // Independent stream for a named component of a larger procedure.
  Rng substream(std::uint64_t id) const {
    return Rng(mix64(seed_ ^ mix64(id ^ 0x5851F42D4C957F2Dull)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace survlab
