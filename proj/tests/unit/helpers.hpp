#pragma once

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metricdepth/error.hpp"
#include "metricdepth/grid.hpp"
#include "metricdepth/rng.hpp"

// Checks that `expr` throws metricdepth::Error carrying `expected`.
#define CHECK_THROWS_CODE(expr, expected)                                \
  do {                                                                   \
    bool thrown_ = false;                                                \
    try {                                                                \
      (void)(expr);                                                      \
    } catch (const metricdepth::Error& e_) {                             \
      thrown_ = true;                                                    \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());                 \
    }                                                                    \
    CHECK_MESSAGE(thrown_, "expected metricdepth::Error from " #expr);   \
  } while (0)

namespace testutil {

inline metricdepth::Grid3 random_grid3(std::size_t h, std::size_t w, std::size_t c,
                                       std::uint64_t seed, double scale = 1.0) {
  metricdepth::SeedRng rng(seed);
  metricdepth::Grid3 g(h, w, c);
  for (double& v : g.data()) v = rng.uniform(-scale, scale);
  return g;
}

inline metricdepth::Grid1 random_depth(std::size_t h, std::size_t w, std::uint64_t seed,
                                       double lo = 0.5, double hi = 3.0,
                                       double valid_prob = 1.0) {
  metricdepth::SeedRng rng(seed);
  std::vector<double> v(h * w);
  std::vector<std::uint8_t> m(h * w);
  for (std::size_t p = 0; p < h * w; ++p) {
    v[p] = rng.uniform(lo, hi);
    m[p] = rng.uniform01() < valid_prob ? 1 : 0;
  }
  return metricdepth::Grid1(h, w, std::move(v), std::move(m));
}

// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("metricdepth_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
