#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace phz::rng {

// splitmix64: used to derive independent substream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

/// Deterministic generator: mt19937_64 with explicit output mappings so that
/// draws are bit-identical across standard libraries (std distributions are
/// implementation-defined).
class Rand {
 public:
  explicit Rand(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1): top 53 bits of the engine output.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; caches the second draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1], log finite
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Exponential with unit mean.
  double exponential() { return -std::log(1.0 - uniform()); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    std::size_t k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace phz::rng
