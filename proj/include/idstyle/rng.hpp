#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

namespace idstyle {

/// Named purposes for independent random streams derived from one seed.
enum class Stream : std::uint64_t {
  World = 1,
  Init = 2,
  Dataset = 3,
  Evaluation = 4,
  GradCheck = 5,
  Latent = 6,
};

/// SplitMix64 counter generator.
///
/// The state is a 64-bit counter advanced by the golden-ratio increment and
/// passed through a fixed avalanche mix, so the sequence depends only on the
/// seed and is identical on every platform. Distinct purposes get distinct
/// streams through `Rng::stream`, which hashes (seed, purpose, index) into a
/// fresh starting counter.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
    std::uint64_t s = mix(seed ^ 0x243F6A8885A308D3ULL);
    s = mix(s ^ (static_cast<std::uint64_t>(purpose) * 0x9E3779B97F4A7C15ULL));
    s = mix(s ^ (index + 0x13198A2E03707344ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::optional<double> spare_;
};

}  // namespace idstyle
