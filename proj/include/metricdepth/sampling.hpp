#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "metricdepth/grid.hpp"
#include "metricdepth/rng.hpp"

namespace metricdepth {

/// Sample produced by circularly shifting the anchor's own maps.
struct WithinShift {
  std::int64_t shift_h;
  std::int64_t shift_w;
  friend bool operator==(const WithinShift&, const WithinShift&) = default;
};

/// Sample taken unshifted from another batch item.
struct AcrossBatch {
  std::int64_t offset;       // in [1, K-1]
  std::size_t batch_index;   // (anchor_index + offset) mod K
  friend bool operator==(const AcrossBatch&, const AcrossBatch&) = default;
};

using SampleProvenance = std::variant<WithinShift, AcrossBatch>;

struct SamplePair {
  Grid3 feature;
  Grid1 depth;
  SampleProvenance provenance;
  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

/// Ordered sample maps for one anchor: within-map samples first, then
/// across-batch samples.
struct SampleSet {
  std::vector<SamplePair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

struct BatchItem {
  Grid3 feature;
  Grid1 depth;
};

/// K feature/depth pairs sharing one (H, W, C). Validated on construction.
class Batch {
 public:
  explicit Batch(std::vector<BatchItem> items);

  std::size_t size() const noexcept { return items_.size(); }
  const BatchItem& operator[](std::size_t k) const { return items_[k]; }
  const std::vector<BatchItem>& items() const noexcept { return items_; }

 private:
  std::vector<BatchItem> items_;
};

/// Seed draws behind collect_within / collect_across, without building any
/// maps. Consumes the rng exactly as the collectors do, so a plan and the
/// matching sample set always agree.
std::vector<SampleProvenance> plan_within(std::size_t height, std::size_t width,
                                          std::size_t n_within, SeedRng& rng);
std::vector<SampleProvenance> plan_across(std::size_t batch_size, std::size_t anchor_index,
                                          std::size_t n_across, SeedRng& rng);

/// n_within shifted copies of (f_a, d_a); feature and depth share each
/// (s_h, s_w) with s_h drawn from [1, H-1] and then s_w from [1, W-1].
SampleSet collect_within(const Grid3& f_a, const Grid1& d_a, std::size_t n_within, SeedRng& rng);

/// n_across batch items at offsets drawn from [1, K-1] relative to the anchor.
SampleSet collect_across(const Batch& batch, std::size_t anchor_index, std::size_t n_across,
                         SeedRng& rng);

/// Within-map samples followed by across-batch samples.
SampleSet build_sample_set(const Grid3& f_a, const Grid1& d_a, const Batch& batch,
                           std::size_t anchor_index, std::size_t n_within, std::size_t n_across,
                           SeedRng& rng);

}  // namespace metricdepth
