#include "metricdepth/grid.hpp"

#include <cmath>
#include <string>

#include "metricdepth/error.hpp"

namespace metricdepth {

namespace {

void check_extent(std::size_t height, std::size_t width) {
  if (height < 1 || width < 1) {
    throw Error(ErrorCode::InvalidDimension,
                "grid extent must be at least 1x1, got " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
}

void check_shift(std::int64_t shift_h, std::int64_t shift_w, std::size_t height,
                 std::size_t width) {
  if (shift_h < 0 || shift_w < 0 || static_cast<std::size_t>(shift_h) >= height ||
      static_cast<std::size_t>(shift_w) >= width) {
    throw Error(ErrorCode::InvalidShift, "shift (" + std::to_string(shift_h) + ", " +
                                             std::to_string(shift_w) + ") outside " +
                                             std::to_string(height) + "x" +
                                             std::to_string(width));
  }
}

// Row-major pixel permutation shared by both grid kinds: calls
// copy(dst_pixel, src_pixel) for every destination pixel.
template <typename Copy>
void roll_pixels(std::size_t height, std::size_t width, std::size_t shift_h,
                 std::size_t shift_w, Copy&& copy) {
  for (std::size_t i = 0; i < height; ++i) {
    const std::size_t src_i = (i + height - shift_h) % height;
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t src_j = (j + width - shift_w) % width;
      copy(i * width + j, src_i * width + src_j);
    }
  }
}

}  // namespace

Grid3::Grid3(std::size_t height, std::size_t width, std::size_t channels)
    : height_(height), width_(width), channels_(channels) {
  check_extent(height, width);
  if (channels < 1) throw Error(ErrorCode::InvalidDimension, "Grid3 needs at least one channel");
  data_.assign(height * width * channels, 0.0);
}

Grid3::Grid3(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_extent(height, width);
  if (channels < 1) throw Error(ErrorCode::InvalidDimension, "Grid3 needs at least one channel");
  if (data_.size() != height * width * channels) {
    throw Error(ErrorCode::ShapeError, "Grid3 data length " + std::to_string(data_.size()) +
                                           " != H*W*C = " +
                                           std::to_string(height * width * channels));
  }
  if (!all_finite()) throw Error(ErrorCode::NonFinite, "Grid3 data contains NaN or Inf");
}

bool Grid3::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Grid1::Grid1(std::size_t height, std::size_t width)
    : height_(height), width_(width) {
  check_extent(height, width);
  values_.assign(height * width, 0.0);
  valid_.assign(height * width, 1);
}

Grid1::Grid1(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  check_extent(height, width);
  valid_.assign(height * width, 1);
  check_invariants();
}

Grid1::Grid1(std::size_t height, std::size_t width, std::vector<double> values,
             std::vector<std::uint8_t> valid)
    : height_(height), width_(width), values_(std::move(values)), valid_(std::move(valid)) {
  check_extent(height, width);
  for (auto& v : valid_) v = v ? 1 : 0;
  check_invariants();
}

void Grid1::check_invariants() const {
  const std::size_t n = height_ * width_;
  if (values_.size() != n || valid_.size() != n) {
    throw Error(ErrorCode::ShapeError, "Grid1 values/mask length must equal H*W = " +
                                           std::to_string(n));
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!valid_[p]) continue;
    if (!std::isfinite(values_[p])) {
      throw Error(ErrorCode::NonFinite, "Grid1 valid pixel " + std::to_string(p) + " is not finite");
    }
    if (values_[p] < 0.0) {
      throw Error(ErrorCode::DomainError, "Grid1 valid pixel " + std::to_string(p) + " is negative");
    }
  }
}

std::size_t Grid1::valid_count() const noexcept {
  std::size_t n = 0;
  for (auto v : valid_) n += v;
  return n;
}

Grid3 shift2d(const Grid3& map, std::int64_t shift_h, std::int64_t shift_w) {
  check_shift(shift_h, shift_w, map.height(), map.width());
  Grid3 out(map.height(), map.width(), map.channels());
  const std::size_t c = map.channels();
  const auto src = map.data();
  auto dst = out.data();
  roll_pixels(map.height(), map.width(), static_cast<std::size_t>(shift_h),
              static_cast<std::size_t>(shift_w), [&](std::size_t d, std::size_t s) {
                for (std::size_t k = 0; k < c; ++k) dst[d * c + k] = src[s * c + k];
              });
  return out;
}

Grid1 shift2d(const Grid1& map, std::int64_t shift_h, std::int64_t shift_w) {
  check_shift(shift_h, shift_w, map.height(), map.width());
  std::vector<double> values(map.pixels());
  std::vector<std::uint8_t> valid(map.pixels());
  const auto src_values = map.values();
  const auto src_valid = map.valid_mask();
  roll_pixels(map.height(), map.width(), static_cast<std::size_t>(shift_h),
              static_cast<std::size_t>(shift_w), [&](std::size_t d, std::size_t s) {
                values[d] = src_values[s];
                valid[d] = src_valid[s];
              });
  return Grid1(map.height(), map.width(), std::move(values), std::move(valid));
}

ShiftPair inverse_shift(std::size_t height, std::size_t width, ShiftPair s) {
  const auto h = static_cast<std::int64_t>(height);
  const auto w = static_cast<std::int64_t>(width);
  return {(h - s.h % h) % h, (w - s.w % w) % w};
}

}  // namespace metricdepth
