#include "metricdepth/rng.hpp"

#include <cmath>
#include <numbers>

#include "metricdepth/error.hpp"

namespace metricdepth {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SeedRng::next_u64() noexcept {
  state_ += kGolden;
  return finalize(state_);
}

std::uint64_t SeedRng::uniform_below(std::uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::InvalidDimension, "uniform_below: bound must be positive");
  }
  // Reject the low (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double SeedRng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeedRng::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SeedRng SeedRng::split() noexcept {
  return SeedRng(finalize(next_u64() ^ 0xD1B54A32D192ED03ULL));
}

std::int64_t gen_shift_seed(SeedRng& rng, std::int64_t n) {
  if (n < 2) {
    throw Error(ErrorCode::InvalidDimension,
                "gen_shift_seed: n must be >= 2, got " + std::to_string(n));
  }
  return 1 + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(n - 1)));
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return finalize(finalize(a + kGolden) ^ (b * 0xFF51AFD7ED558CCDULL + kGolden));
}

}  // namespace metricdepth
