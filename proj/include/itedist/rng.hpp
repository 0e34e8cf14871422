#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace itedist {

// SplitMix64 finalizer (Steele, Lea & Flood; constants from Vigna).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derive a child key from a parent key and a path of integer labels.
/// Distinct paths give statistically independent streams; the mapping is
/// pure, so the same path always yields the same key.
constexpr std::uint64_t derive_key(std::uint64_t parent,
                                   std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(parent ^ 0x6A09E667F3BCC909ULL);
  std::uint64_t depth = 0;
  for (std::uint64_t label : path) {
    ++depth;
    h = mix64(h + 0x9E3779B97F4A7C15ULL * depth);
    h = mix64(h ^ mix64(label + 0xD1B54A32D192ED03ULL));
  }
  return h;
}

/// Labels that separate the purposes a key can be used for.
enum class StreamTag : std::uint64_t {
  kBootstrap = 1,
  kMonteCarlo = 2,
  kGenerate = 3,
  kBootstrapSeed = 4,
};

/// xoshiro256** seeded through SplitMix64. Satisfies
/// UniformRandomBitGenerator, plus the few portable draws the library needs
/// (the std distributions are implementation-defined, which would break
/// cross-platform reproducibility).
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept {
    std::uint64_t s = key;
    for (auto& word : state_) {
      s += 0x9E3779B97F4A7C15ULL;
      word = mix64(s);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) without modulo bias (Lemire's method).
  std::uint64_t below(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    u128 m = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<u128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal draw (Box-Muller, one output per call).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace itedist
