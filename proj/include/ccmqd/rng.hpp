#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace ccmqd {

/// SplitMix64 finalizer. Used to derive independent child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seedable, splittable generator. The seed fully determines the stream for a
/// given build; children derived with split() are independent of each other
/// and of the parent.
///
/// Never share one instance between threads; split instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Standard complex Gaussian: real and imaginary parts N(0, 1/2).
  std::complex<double> complex_normal() {
    constexpr double kScale = 0.70710678118654752440;
    const double re = normal();
    const double im = normal();
    return {kScale * re, kScale * im};
  }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ccmqd
