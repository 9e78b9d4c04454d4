#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metricdepth/grid.hpp"
#include "metricdepth/identify.hpp"
#include "metricdepth/sampling.hpp"

namespace metricdepth {

/// Loss contributions after reduction; positive + sum(negative) == total.
struct TermBreakdown {
  double positive_loss = 0.0;
  std::size_t positive_count = 0;
  std::vector<double> negative_loss;        // index j-1 for subgroup j
  std::vector<std::size_t> negative_count;  // classified pixels per subgroup
  std::vector<std::size_t> active_count;    // negatives with dist < margin
};

struct LossResult {
  double total = 0.0;
  TermBreakdown breakdown;
  std::size_t contributing_count = 0;  // non-Ignored (sample, pixel) terms
  std::size_t ignored_count = 0;
  Grid3 grad_anchor;
  std::vector<Grid3> grad_samples;

  /// Share of (sample, pixel) terms labelled Ignored; 0 when there are none.
  double ignored_fraction() const noexcept;
};

/// Scale-invariant log loss constants: alpha * sqrt(mean(g^2) - lambda * mean(g)^2).
struct DepthLossParams {
  double variance_focus = 0.85;  // lambda
  double output_scale = 10.0;    // alpha

  void validate() const;
  friend bool operator==(const DepthLossParams&, const DepthLossParams&) = default;
};

struct DepthLossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d pred per pixel, 0 off the valid set
  std::size_t valid_count = 0;
};

/// Euclidean distance between two feature vectors of equal length.
double feat_distance(std::span<const double> f1, std::span<const double> f2);

/// Per-pixel term: dist for Positive, max(0, m_j - dist) for Negative(j).
double pair_loss(double dist, SampleLabel label, const RegConfig& config);

/// Regularization loss of anchor f_a against every sample map, with
/// gradients for the anchor and for each sample feature map.
LossResult reg_loss(const Grid3& f_a, const Grid1& d_a, const SampleSet& samples,
                    const RegConfig& config);

/// Scale-invariant depth loss over pixels valid in both maps with gt > 0.
DepthLossResult si_loss(const Grid1& pred, const Grid1& gt, const DepthLossParams& params);

/// reg_total + weight * depth.
double final_loss(const LossResult& reg, double depth, double weight = 1.0);

namespace testing {

/// Deliberate defects used to prove the verification suites can fail.
enum class Fault {
  None,
  FlipHingeGradient,  // negative-term gradient with the wrong sign
  GapAsNegative,      // classifier treats the r_p..r_n gap as negative
};

LossResult reg_loss_with_fault(const Grid3& f_a, const Grid1& d_a, const SampleSet& samples,
                               const RegConfig& config, Fault fault);

}  // namespace testing

}  // namespace metricdepth
