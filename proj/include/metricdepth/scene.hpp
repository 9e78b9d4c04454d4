#pragma once

#include <cstddef>
#include <cstdint>

#include "metricdepth/grid.hpp"

namespace metricdepth {

struct SceneParams {
  std::size_t height = 64;
  std::size_t width = 64;
  double d_min = 0.5;
  double d_max = 10.0;
  std::size_t input_channels = 3;

  void validate() const;
  friend bool operator==(const SceneParams&, const SceneParams&) = default;
};

/// Bumped whenever the generator changes in a way that alters output.
inline constexpr int kSceneGeneratorVersion = 1;

struct SyntheticScene {
  Grid3 image;  // values in [0, 1]
  Grid1 depth;  // all valid, within [d_min, d_max]
  std::uint64_t seed;
};

/// Procedural scene: a slanted background plane plus 2-6 rectangles and
/// disks at distinct depths, rendered into image channels that encode depth
/// through shading and texture cues, an albedo nuisance term and noise.
SyntheticScene gen_scene(std::uint64_t seed, const SceneParams& params);

}  // namespace metricdepth
