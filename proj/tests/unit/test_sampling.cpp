#include "helpers.hpp"
#include "metricdepth/sampling.hpp"

using namespace metricdepth;

namespace {

Batch make_batch(std::size_t k, std::size_t h, std::size_t w, std::size_t c) {
  std::vector<BatchItem> items;
  for (std::size_t i = 0; i < k; ++i) {
    items.push_back({testutil::random_grid3(h, w, c, 10 + i), testutil::random_depth(h, w, 20 + i)});
  }
  return Batch(std::move(items));
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("collect_within counts") {
  const Grid3 f = testutil::random_grid3(5, 6, 3, 1);
  const Grid1 d = testutil::random_depth(5, 6, 2);
  SeedRng rng(3);
  CHECK(collect_within(f, d, 0, rng).empty());
  const SampleSet s = collect_within(f, d, 10, rng);
  CHECK(s.size() == 10);
  for (const auto& p : s.pairs) {
    CHECK(p.feature.same_shape(f));
    CHECK(p.depth.same_shape(d));
  }
}

TEST_CASE("within samples are rolls sharing one shift") {
  const Grid3 f = testutil::random_grid3(4, 7, 2, 5);
  const Grid1 d = testutil::random_depth(4, 7, 6, 0.5, 3.0, 0.8);
  SeedRng rng(99);
  const SampleSet s = collect_within(f, d, 12, rng);
  for (const auto& p : s.pairs) {
    const auto& w = std::get<WithinShift>(p.provenance);
    CHECK(w.shift_h >= 1);
    CHECK(w.shift_h <= 3);
    CHECK(w.shift_w >= 1);
    CHECK(w.shift_w <= 6);
    CHECK(p.feature == shift2d(f, w.shift_h, w.shift_w));
    CHECK(p.depth == shift2d(d, w.shift_h, w.shift_w));
    const ShiftPair inv = inverse_shift(4, 7, {w.shift_h, w.shift_w});
    CHECK(shift2d(p.depth, inv.h, inv.w) == d);
    // Locational consistency: sample depth at i is anchor depth at the source of i.
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        const std::size_t si = (i + 4 - static_cast<std::size_t>(w.shift_h)) % 4;
        const std::size_t sj = (j + 7 - static_cast<std::size_t>(w.shift_w)) % 7;
        CHECK(p.depth.value(i, j) == d.value(si, sj));
      }
    }
  }
}

TEST_CASE("collect_within needs at least 2x2") {
  SeedRng rng(1);
  CHECK_THROWS_CODE(collect_within(Grid3(1, 4, 1), Grid1(1, 4), 1, rng), ErrorCode::InvalidDimension);
  CHECK_THROWS_CODE(collect_within(Grid3(4, 1, 1), Grid1(4, 1), 1, rng), ErrorCode::InvalidDimension);
}

TEST_CASE("collect_across with two items always picks the other") {
  const Batch b = make_batch(2, 3, 3, 2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    SeedRng rng(s);
    const SampleSet set = collect_across(b, 0, 1, rng);
    REQUIRE(set.size() == 1);
    CHECK(std::get<AcrossBatch>(set.pairs[0].provenance).batch_index == 1);
    CHECK(set.pairs[0].feature == b[1].feature);
  }
}

TEST_CASE("collect_across never returns the anchor") {
  const Batch b = make_batch(8, 3, 3, 2);
  SeedRng rng(17);
  for (std::size_t anchor = 0; anchor < 8; ++anchor) {
    const SampleSet set = collect_across(b, anchor, 4, rng);
    CHECK(set.size() == 4);
    for (const auto& p : set.pairs) {
      const auto& a = std::get<AcrossBatch>(p.provenance);
      CHECK(a.offset >= 1);
      CHECK(a.offset <= 7);
      CHECK(a.batch_index == (anchor + static_cast<std::size_t>(a.offset)) % 8);
      CHECK(a.batch_index != anchor);
      CHECK(p.feature == b[a.batch_index].feature);
      CHECK(p.depth == b[a.batch_index].depth);
    }
  }
}

TEST_CASE("collect_across errors") {
  const Batch one = make_batch(1, 2, 2, 1);
  SeedRng rng(1);
  CHECK_THROWS_CODE(collect_across(one, 0, 2, rng), ErrorCode::InsufficientBatch);
  CHECK(collect_across(one, 0, 0, rng).empty());
  const Batch two = make_batch(2, 2, 2, 1);
  CHECK_THROWS_CODE(collect_across(two, 2, 1, rng), ErrorCode::InvalidDimension);
}

TEST_CASE("Batch validation") {
  CHECK_THROWS_CODE(Batch({}), ErrorCode::InsufficientBatch);
  std::vector<BatchItem> items{{Grid3(2, 2, 1), Grid1(2, 2)}, {Grid3(2, 3, 1), Grid1(2, 3)}};
  CHECK_THROWS_CODE(Batch(items), ErrorCode::ShapeError);
}

TEST_CASE("build_sample_set ordering and sizes") {
  const Batch b = make_batch(4, 4, 4, 3);
  SeedRng rng(5);
  const SampleSet s = build_sample_set(b[0].feature, b[0].depth, b, 0, 10, 4, rng);
  CHECK(s.size() == 14);
  for (std::size_t i = 0; i < 10; ++i) CHECK(std::holds_alternative<WithinShift>(s.pairs[i].provenance));
  for (std::size_t i = 10; i < 14; ++i) CHECK(std::holds_alternative<AcrossBatch>(s.pairs[i].provenance));

  SeedRng r2(5);
  const SampleSet within_only = build_sample_set(b[0].feature, b[0].depth, b, 0, 10, 0, r2);
  CHECK(within_only.size() == 10);
  SeedRng r3(5);
  CHECK(build_sample_set(b[0].feature, b[0].depth, b, 0, 0, 0, r3).empty());
}

TEST_CASE("sampling is deterministic and matches its plan") {
  const Batch b = make_batch(3, 5, 4, 2);
  SeedRng r1(8), r2(8), r3(8);
  const SampleSet a = build_sample_set(b[1].feature, b[1].depth, b, 1, 6, 3, r1);
  const SampleSet c = build_sample_set(b[1].feature, b[1].depth, b, 1, 6, 3, r2);
  CHECK(a == c);
  auto plan = plan_within(5, 4, 6, r3);
  for (auto& p : plan_across(3, 1, 3, r3)) plan.push_back(p);
  REQUIRE(plan.size() == a.size());
  for (std::size_t i = 0; i < plan.size(); ++i) CHECK(plan[i] == a.pairs[i].provenance);
  CHECK(r1.state() == r3.state());
}

}  // TEST_SUITE
