#pragma once

#include <cstdint>

namespace metricdepth {

/// SplitMix64 stream. Output is a fixed function of the 64-bit state, so a
/// given seed reproduces the same sequence on every platform.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class SeedRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64";

  explicit SeedRng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one draw per call; the pair's second
  /// value is discarded to keep the stream position simple).
  double normal() noexcept;

  /// Independent child stream; advances this stream by one draw.
  SeedRng split() noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Integer seed uniform over [1, n - 1]. Throws InvalidDimension for n < 2.
std::int64_t gen_shift_seed(SeedRng& rng, std::int64_t n);

/// Deterministic 64-bit mixing of two values, used to derive per-run and
/// per-scene seeds from config seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace metricdepth
