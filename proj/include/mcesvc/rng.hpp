#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mce {

// Counter-based normal variate generator.
//
// The uniform source is the SplitMix64 output function applied to a keyed
// counter:
//
//   word(seed, ctr) = mix64(seed + (ctr + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the standard SplitMix64 finalizer (xor-shift / multiply
// sequence below). Every 64-bit word is a pure function of (seed, ctr), so
// any path index can be evaluated independently and in any order, which is
// what makes block-partitioned simulation deterministic under arbitrary
// thread counts.
//
// Uniforms map the top 53 bits into the open interval (0,1):
//
//   u(seed, ctr) = ((word >> 11) + 0.5) * 2^-53
//
// never producing 0 or 1, so log(u) is always finite.
//
// Normals use the Box-Muller transform, cosine branch only. Draw index i
// consumes exactly the two counters 2i and 2i+1:
//
//   z_i = sqrt(-2 ln u(seed, 2i)) * cos(2 pi * u(seed, 2i+1))
//
// The sine branch is discarded to keep each draw a pure function of
// (seed, i). Streams are reproducible from the seed alone; bit-identity is
// guaranteed within one build, not across implementations or platforms.

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t word_at(std::uint64_t seed, std::uint64_t ctr) noexcept {
  return mix64(seed + (ctr + 1) * kSplitMixGamma);
}

// Uniform in the open interval (0,1).
inline double uniform_at(std::uint64_t seed, std::uint64_t ctr) noexcept {
  return (static_cast<double>(word_at(seed, ctr) >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal draw i of the stream keyed by seed.
inline double normal_at(std::uint64_t seed, std::uint64_t index) noexcept {
  const double u1 = uniform_at(seed, 2 * index);
  const double u2 = uniform_at(seed, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Stateful view over the same stream, for sequential consumers.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : seed_(seed) {}

  double next() { return normal_at(seed_, index_++); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

}  // namespace mce
