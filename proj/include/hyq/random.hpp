#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hyq {

/// Independent random streams derived from one user seed. Each subsystem draws
/// from its own stream so that, e.g., changing the number of sampled queries
/// does not perturb weight initialization.
enum class Stream : std::uint64_t {
  Sampler = 1,
  Init = 2,
  Shuffle = 3,
  Dropout = 4,
  Synthetic = 5,
  Test = 99,
};

/// mt19937_64 keyed by splitmix64(seed, stream). The distribution helpers are
/// written out here because the standard library distributions are not
/// specified bit-for-bit across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::Test)
      : engine_(mix(seed ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL))) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Box-Muller; the second variate is discarded to keep the state simple.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename Container>
  void shuffle(Container& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace hyq
