#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace metricdepth {

/// Dense H x W x C feature map, row-major with channels innermost:
/// index(i, j, c) = (i * W + j) * C + c.
class Grid3 {
 public:
  Grid3(std::size_t height, std::size_t width, std::size_t channels);  // zero-filled
  Grid3(std::size_t height, std::size_t width, std::size_t channels,
        std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  double& at(std::size_t i, std::size_t j, std::size_t c) {
    return data_[(i * width_ + j) * channels_ + c];
  }
  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return data_[(i * width_ + j) * channels_ + c];
  }

  /// Feature vector of flat pixel index p = i * W + j.
  std::span<double> pixel(std::size_t p) {
    return {data_.data() + p * channels_, channels_};
  }
  std::span<const double> pixel(std::size_t p) const {
    return {data_.data() + p * channels_, channels_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Grid3& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<double> data_;
};

/// Dense H x W depth map (meters) with a per-pixel validity mask.
class Grid1 {
 public:
  Grid1(std::size_t height, std::size_t width);  // zero depth, all valid
  Grid1(std::size_t height, std::size_t width, std::vector<double> values);
  Grid1(std::size_t height, std::size_t width, std::vector<double> values,
        std::vector<std::uint8_t> valid);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  double& value(std::size_t p) { return values_[p]; }
  double value(std::size_t p) const { return values_[p]; }
  double value(std::size_t i, std::size_t j) const { return values_[i * width_ + j]; }
  bool valid(std::size_t p) const { return valid_[p] != 0; }
  bool valid(std::size_t i, std::size_t j) const { return valid_[i * width_ + j] != 0; }
  void set_valid(std::size_t p, bool v) { valid_[p] = v ? 1 : 0; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> valid_mask() const noexcept { return valid_; }

  bool same_shape(const Grid1& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool same_extent(const Grid3& other) const noexcept {
    return height_ == other.height() && width_ == other.width();
  }

  std::size_t valid_count() const noexcept;

  friend bool operator==(const Grid1&, const Grid1&) = default;

 private:
  void check_invariants() const;

  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// Circular roll: out(i, j) = in((i - shift_h) mod H, (j - shift_w) mod W).
/// Content moves down by shift_h rows and right by shift_w columns.
/// Requires 0 <= shift_h < H and 0 <= shift_w < W.
/// Throws InvalidShift otherwise.
Grid3 shift2d(const Grid3& map, std::int64_t shift_h, std::int64_t shift_w);
Grid1 shift2d(const Grid1& map, std::int64_t shift_h, std::int64_t shift_w);

/// The shift that undoes shift2d(., shift_h, shift_w) for an extent H x W.
struct ShiftPair {
  std::int64_t h;
  std::int64_t w;
  friend bool operator==(const ShiftPair&, const ShiftPair&) = default;
};
ShiftPair inverse_shift(std::size_t height, std::size_t width, ShiftPair s);

}  // namespace metricdepth
