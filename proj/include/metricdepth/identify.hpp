#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "metricdepth/grid.hpp"

namespace metricdepth {

/// Single negative group: differentials above `r_n` are pushed to `margin`.
struct UniformStrategy {
  double r_n = 0.5;
  double margin = 4.0;
  friend bool operator==(const UniformStrategy&, const UniformStrategy&) = default;
};

/// One negative subgroup: differentials strictly inside (low, high).
struct NegativeRange {
  double low;
  double high;
  double margin;
  friend bool operator==(const NegativeRange&, const NegativeRange&) = default;
};

/// Subgroup j (1-based) is ranges[j - 1]. Sorted ascending, non-overlapping.
struct MultiRangeStrategy {
  std::vector<NegativeRange> ranges;
  friend bool operator==(const MultiRangeStrategy&, const MultiRangeStrategy&) = default;
};

/// Regularization switched off; used for baseline runs.
struct NoRegularization {
  friend bool operator==(const NoRegularization&, const NoRegularization&) = default;
};

using RegStrategy = std::variant<UniformStrategy, MultiRangeStrategy, NoRegularization>;

enum class LossReduction { Sum, MeanOverContributing };

struct RegConfig {
  double r_p = 0.1;
  RegStrategy strategy = UniformStrategy{};
  std::size_t n_within = 10;
  std::size_t n_across = 4;
  LossReduction loss_reduction = LossReduction::MeanOverContributing;
  double depth_loss_weight = 1.0;

  /// Throws InvalidConfig describing the first violated constraint.
  void validate() const;

  bool enabled() const noexcept { return !std::holds_alternative<NoRegularization>(strategy); }

  /// Margin of negative subgroup j (1-based).
  double margin(int subgroup) const;
  int subgroup_count() const noexcept;

  /// Lower differential bound of the first negative group (r_n or r_l^1).
  double first_negative_bound() const;

  friend bool operator==(const RegConfig&, const RegConfig&) = default;
};

/// Classification of one sample pixel relative to its anchor pixel.
class SampleLabel {
 public:
  static constexpr SampleLabel positive() noexcept { return SampleLabel(0); }
  static constexpr SampleLabel ignored() noexcept { return SampleLabel(kIgnored); }
  static SampleLabel negative(int subgroup);

  constexpr bool is_positive() const noexcept { return code_ == 0; }
  constexpr bool is_ignored() const noexcept { return code_ == kIgnored; }
  constexpr bool is_negative() const noexcept { return code_ > 0; }
  /// Negative subgroup index (>= 1); 0 for positive, -1 for ignored.
  constexpr int subgroup() const noexcept { return code_; }

  friend constexpr bool operator==(SampleLabel, SampleLabel) = default;

 private:
  static constexpr std::int16_t kIgnored = -1;
  constexpr explicit SampleLabel(std::int16_t code) noexcept : code_(code) {}
  std::int16_t code_;
};

class IdentMap {
 public:
  IdentMap(std::size_t height, std::size_t width);  // all Ignored

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return labels_.size(); }

  SampleLabel operator[](std::size_t p) const { return labels_[p]; }
  void set(std::size_t p, SampleLabel label) { labels_[p] = label; }
  const std::vector<SampleLabel>& labels() const noexcept { return labels_; }

  std::size_t count_positive() const noexcept;
  std::size_t count_ignored() const noexcept;
  std::size_t count_negative(int subgroup) const noexcept;

  friend bool operator==(const IdentMap&, const IdentMap&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<SampleLabel> labels_;
};

/// |d_a - d_s| per pixel; valid only where both inputs are valid.
Grid1 differential_map(const Grid1& d_a, const Grid1& d_s);

/// Positive if D_r < r_p, Negative(1) if D_r > r_n, Ignored otherwise
/// (including equality at either threshold and invalid pixels).
IdentMap identify_uniform(const Grid1& d_r, double r_p, double r_n);

/// Positive if D_r < r_p, Negative(j) if low_j < D_r < high_j, Ignored otherwise.
IdentMap identify_multirange(const Grid1& d_r, double r_p, const MultiRangeStrategy& strategy);
IdentMap identify_multirange(const Grid1& d_r, const RegConfig& config);

/// Dispatches on config.strategy. NoRegularization yields an all-Ignored map.
IdentMap identify(const Grid1& d_r, const RegConfig& config);

/// Label of a single differential value; the per-pixel rule shared by the
/// map-level functions above.
SampleLabel classify_differential(double d_r, double r_p, const RegStrategy& strategy);

}  // namespace metricdepth
