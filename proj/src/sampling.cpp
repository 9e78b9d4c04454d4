#include "metricdepth/sampling.hpp"

#include <string>

#include "metricdepth/error.hpp"

namespace metricdepth {

Batch::Batch(std::vector<BatchItem> items) : items_(std::move(items)) {
  if (items_.empty()) throw Error(ErrorCode::InsufficientBatch, "batch must hold at least one item");
  const Grid3& ref = items_.front().feature;
  for (std::size_t k = 0; k < items_.size(); ++k) {
    const auto& item = items_[k];
    if (!item.feature.same_shape(ref) || !item.depth.same_extent(ref)) {
      throw Error(ErrorCode::ShapeError,
                  "batch item " + std::to_string(k) + " does not match item 0 shape");
    }
  }
}

std::vector<SampleProvenance> plan_within(std::size_t height, std::size_t width,
                                          std::size_t n_within, SeedRng& rng) {
  if (height < 2 || width < 2) {
    throw Error(ErrorCode::InvalidDimension, "within-map sampling needs H >= 2 and W >= 2");
  }
  std::vector<SampleProvenance> plan;
  plan.reserve(n_within);
  for (std::size_t n = 0; n < n_within; ++n) {
    const std::int64_t s_h = gen_shift_seed(rng, static_cast<std::int64_t>(height));
    const std::int64_t s_w = gen_shift_seed(rng, static_cast<std::int64_t>(width));
    plan.emplace_back(WithinShift{s_h, s_w});
  }
  return plan;
}

std::vector<SampleProvenance> plan_across(std::size_t batch_size, std::size_t anchor_index,
                                          std::size_t n_across, SeedRng& rng) {
  if (anchor_index >= batch_size) {
    throw Error(ErrorCode::InvalidDimension, "anchor index " + std::to_string(anchor_index) +
                                                 " outside batch of " + std::to_string(batch_size));
  }
  if (n_across == 0) return {};
  if (batch_size < 2) {
    throw Error(ErrorCode::InsufficientBatch,
                "across-batch sampling needs K >= 2, got K = " + std::to_string(batch_size));
  }
  std::vector<SampleProvenance> plan;
  plan.reserve(n_across);
  for (std::size_t n = 0; n < n_across; ++n) {
    const std::int64_t offset = gen_shift_seed(rng, static_cast<std::int64_t>(batch_size));
    plan.emplace_back(AcrossBatch{offset, (anchor_index + static_cast<std::size_t>(offset)) % batch_size});
  }
  return plan;
}

SampleSet collect_within(const Grid3& f_a, const Grid1& d_a, std::size_t n_within, SeedRng& rng) {
  if (!d_a.same_extent(f_a)) {
    throw Error(ErrorCode::ShapeError, "collect_within: anchor feature/depth extents differ");
  }
  SampleSet out;
  for (const auto& prov : plan_within(f_a.height(), f_a.width(), n_within, rng)) {
    const auto& s = std::get<WithinShift>(prov);
    out.pairs.push_back({shift2d(f_a, s.shift_h, s.shift_w), shift2d(d_a, s.shift_h, s.shift_w), prov});
  }
  return out;
}

SampleSet collect_across(const Batch& batch, std::size_t anchor_index, std::size_t n_across,
                         SeedRng& rng) {
  SampleSet out;
  for (const auto& prov : plan_across(batch.size(), anchor_index, n_across, rng)) {
    const auto& item = batch[std::get<AcrossBatch>(prov).batch_index];
    out.pairs.push_back({item.feature, item.depth, prov});
  }
  return out;
}

SampleSet build_sample_set(const Grid3& f_a, const Grid1& d_a, const Batch& batch,
                           std::size_t anchor_index, std::size_t n_within, std::size_t n_across,
                           SeedRng& rng) {
  if (anchor_index < batch.size() && !batch[anchor_index].feature.same_shape(f_a)) {
    throw Error(ErrorCode::ShapeError, "anchor shape differs from batch items");
  }
  SampleSet out = collect_within(f_a, d_a, n_within, rng);
  SampleSet across = collect_across(batch, anchor_index, n_across, rng);
  out.pairs.reserve(out.pairs.size() + across.pairs.size());
  for (auto& p : across.pairs) out.pairs.push_back(std::move(p));
  return out;
}

}  // namespace metricdepth
