#pragma once

// Internal: regularization loss against shifted views of source maps.
// Used by reg_loss (views over materialized samples) and by the trainer
// (views straight into the batch feature maps, no copies).

#include <cstdint>
#include <span>

#include "metricdepth/grid.hpp"
#include "metricdepth/identify.hpp"
#include "metricdepth/regloss.hpp"

namespace metricdepth::detail {

/// Sample n seen at anchor pixel (i, j) is source pixel
/// ((i - shift_h) mod H, (j - shift_w) mod W). Its gradient is added to
/// `grad` at that source pixel; `grad` may alias the anchor gradient.
struct SampleView {
  const Grid3* feature;
  const Grid1* depth;
  std::int64_t shift_h;
  std::int64_t shift_w;
  Grid3* grad;
};

struct KernelResult {
  double total = 0.0;
  TermBreakdown breakdown;
  std::size_t contributing_count = 0;
  std::size_t ignored_count = 0;
};

/// Adds extra_scale * d(loss)/d(features) into grad_anchor and each view's
/// grad buffer; the returned losses are not multiplied by extra_scale.
KernelResult reg_loss_views(const Grid3& f_a, const Grid1& d_a, std::span<const SampleView> views,
                            const RegConfig& config, double extra_scale, Grid3& grad_anchor,
                            testing::Fault fault);

}  // namespace metricdepth::detail
