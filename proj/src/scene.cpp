#include "metricdepth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "metricdepth/error.hpp"
#include "metricdepth/rng.hpp"

namespace metricdepth {

namespace {

constexpr double kNoiseSigma = 0.01;
constexpr double kMinDepthGap = 0.4;  // meters between object depths
constexpr int kMinShapes = 2;
constexpr int kMaxShapes = 6;

struct Shape {
  bool disk;
  double ci, cj;      // center (pixels)
  double ri, rj;      // half extents / radius (pixels)
  double depth;
  double slope_i, slope_j;  // meters per pixel across the shape
  double albedo;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void SceneParams::validate() const {
  if (height < 8 || width < 8) throw Error(ErrorCode::InvalidConfig, "scene extent must be at least 8x8");
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw Error(ErrorCode::InvalidConfig, "scene depth range needs 0 < d_min < d_max");
  }
  if (input_channels < 1) throw Error(ErrorCode::InvalidConfig, "scene needs at least one input channel");
}

SyntheticScene gen_scene(std::uint64_t seed, const SceneParams& params) {
  params.validate();
  SeedRng rng(mix_seed(seed, kSceneGeneratorVersion));
  const std::size_t h = params.height;
  const std::size_t w = params.width;
  const double span = params.d_max - params.d_min;

  // Background: a plane receding towards the top of the frame.
  const double far = params.d_min + span * rng.uniform(0.55, 1.0);
  const double near = params.d_min + span * rng.uniform(0.05, 0.5);
  const double tilt = span * rng.uniform(-0.1, 0.1);
  const double bg_albedo = rng.uniform(0.4, 1.0);

  std::vector<double> depth(h * w);
  std::vector<double> albedo(h * w, bg_albedo);
  for (std::size_t i = 0; i < h; ++i) {
    const double v = static_cast<double>(i) / static_cast<double>(h - 1);
    for (std::size_t j = 0; j < w; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(w - 1) - 0.5;
      depth[i * w + j] = far + (near - far) * v + tilt * u;
    }
  }

  const int count = kMinShapes + static_cast<int>(rng.uniform_below(kMaxShapes - kMinShapes + 1));
  std::vector<Shape> shapes;
  for (int s = 0; s < count; ++s) {
    Shape sh{};
    sh.disk = rng.uniform01() < 0.5;
    sh.ci = rng.uniform(0.0, static_cast<double>(h));
    sh.cj = rng.uniform(0.0, static_cast<double>(w));
    sh.ri = rng.uniform(0.08, 0.3) * static_cast<double>(h);
    sh.rj = sh.disk ? sh.ri : rng.uniform(0.05, 0.3) * static_cast<double>(w);
    // Distinct depths: redraw (bounded) until clear of earlier objects.
    for (int attempt = 0; attempt < 16; ++attempt) {
      sh.depth = params.d_min + span * rng.uniform01();
      const bool clear = std::none_of(shapes.begin(), shapes.end(), [&](const Shape& o) {
        return std::abs(o.depth - sh.depth) < kMinDepthGap;
      });
      if (clear) break;
    }
    sh.slope_i = rng.uniform(-0.02, 0.02) * span / static_cast<double>(h);
    sh.slope_j = rng.uniform(-0.02, 0.02) * span / static_cast<double>(w);
    sh.albedo = rng.uniform(0.4, 1.0);
    shapes.push_back(sh);
  }

  // Painter's order: later shapes occlude earlier ones.
  for (const auto& sh : shapes) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double di = static_cast<double>(i) - sh.ci;
        const double dj = static_cast<double>(j) - sh.cj;
        const bool inside = sh.disk ? (di * di + dj * dj <= sh.ri * sh.ri)
                                    : (std::abs(di) <= sh.ri && std::abs(dj) <= sh.rj);
        if (!inside) continue;
        depth[i * w + j] = sh.depth + sh.slope_i * di + sh.slope_j * dj;
        albedo[i * w + j] = sh.albedo;
      }
    }
  }
  for (auto& d : depth) d = std::clamp(d, params.d_min, params.d_max);

  // Rendering. t is log-depth normalized to [0, 1].
  const std::size_t c_in = params.input_channels;
  const double log_lo = std::log(params.d_min);
  const double log_span = std::log(params.d_max) - log_lo;
  std::vector<double> image(h * w * c_in);
  for (std::size_t p = 0; p < h * w; ++p) {
    const double t = (std::log(depth[p]) - log_lo) / log_span;
    const double a = albedo[p];
    for (std::size_t k = 0; k < c_in; ++k) {
      double v = 0.0;
      switch (k) {
        case 0: v = a * (1.0 - 0.8 * t); break;                                   // shading
        case 1: v = 0.5 + 0.5 * std::sin(3.0 * std::numbers::pi * t); break;     // texture
        case 2: v = a; break;                                                     // albedo
        default: v = 0.5 + 0.5 * std::cos(std::numbers::pi * static_cast<double>(k - 1) * t);
      }
      image[p * c_in + k] = clamp01(v + kNoiseSigma * rng.normal());
    }
  }

  return SyntheticScene{Grid3(h, w, c_in, std::move(image)), Grid1(h, w, std::move(depth)), seed};
}

}  // namespace metricdepth
