#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace dcfit {

// All randomness in the library flows through this wrapper so that results
// are bit-reproducible across platforms: the engine (mt19937_64) is fully
// specified by the standard and the uniform/normal transforms below are
// implemented here rather than delegated to implementation-defined
// std:: distributions.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/boxmuller/v1";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-style seed derivation: children streams never overlap for distinct
// (stream, index) pairs, so adding consumers does not perturb existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
  return h;
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t kSample = 1;
inline constexpr std::uint64_t kOracle = 2;
inline constexpr std::uint64_t kNuisance = 3;
inline constexpr std::uint64_t kBootstrap = 4;
inline constexpr std::uint64_t kPartition = 5;
inline constexpr std::uint64_t kStability = 6;
inline constexpr std::uint64_t kLearner = 7;
inline constexpr std::uint64_t kFolds = 8;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Raw 64-bit engine output; used to derive child-stream seeds.
  std::uint64_t raw() { return engine_(); }

  // Uniform draw on [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two engine draws.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased integer on [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Fisher-Yates shuffle driven by below(), not std::shuffle, for
  // cross-platform determinism.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace dcfit
