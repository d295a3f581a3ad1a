// Seedable random streams with a fixed, platform-independent output.
//
// Generator "mtlqg-rng/1": std::mt19937_64 seeded through splitmix64; uniform
// doubles take the top 53 bits; normals use the Box-Muller transform with
// both outputs consumed in order. Stream k of a seed is seeded with
// splitmix64(seed ^ splitmix64(k + 1)), which is how rollouts split a seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mtlqg {

inline constexpr const char* kRngName = "mtlqg-rng/1";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t k) {
    return Rng(seed ^ splitmix64(k + 1));
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mtlqg
