#include "helpers.hpp"
#include "metricdepth/identify.hpp"

using namespace metricdepth;

namespace {

Grid1 single(double v) { return Grid1(1, 1, {v}); }

MultiRangeStrategy two_ranges() { return MultiRangeStrategy{{{0.5, 1.0, 5.0}, {1.0, 1.5, 9.0}}}; }

}  // namespace

TEST_SUITE("identify") {

TEST_CASE("differential_map") {
  const Grid1 a(1, 3, {2.0, 1.0, 3.0}, {1, 1, 1});
  const Grid1 b(1, 3, {1.2, 1.0, 0.0}, {1, 1, 0});
  const Grid1 d = differential_map(a, b);
  CHECK(d.value(0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(d.value(1) == 0.0);
  CHECK_FALSE(d.valid(2));
  CHECK(differential_map(a, a).values()[0] == 0.0);
  CHECK(differential_map(a, b) == differential_map(b, a));
  CHECK_THROWS_CODE(differential_map(a, Grid1(3, 1)), ErrorCode::ShapeError);
}

TEST_CASE("uniform identification") {
  CHECK(identify_uniform(single(0.05), 0.1, 0.5)[0] == SampleLabel::positive());
  CHECK(identify_uniform(single(0.3), 0.1, 0.5)[0] == SampleLabel::ignored());
  CHECK(identify_uniform(single(0.7), 0.1, 0.5)[0] == SampleLabel::negative(1));
  // Equality at either threshold is Ignored.
  CHECK(identify_uniform(single(0.1), 0.1, 0.5)[0].is_ignored());
  CHECK(identify_uniform(single(0.5), 0.1, 0.5)[0].is_ignored());
  CHECK(identify_uniform(Grid1(1, 1, {0.0}, {0}), 0.1, 0.5)[0].is_ignored());
  CHECK_THROWS_CODE(identify_uniform(single(0.3), 0.6, 0.5), ErrorCode::InvalidConfig);
}

TEST_CASE("multi-range identification") {
  const auto s = two_ranges();
  CHECK(identify_multirange(single(0.8), 0.1, s)[0] == SampleLabel::negative(1));
  CHECK(identify_multirange(single(1.2), 0.1, s)[0] == SampleLabel::negative(2));
  CHECK(identify_multirange(single(1.8), 0.1, s)[0].is_ignored());
  CHECK(identify_multirange(single(0.05), 0.1, s)[0].is_positive());
  CHECK(identify_multirange(single(0.3), 0.1, s)[0].is_ignored());
  for (double boundary : {0.1, 0.5, 1.0, 1.5}) {
    CHECK(identify_multirange(single(boundary), 0.1, s)[0].is_ignored());
  }
}

TEST_CASE("RegConfig validation") {
  RegConfig c;
  CHECK_NOTHROW(c.validate());
  c.r_p = 0.0;
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c = RegConfig{};
  c.strategy = UniformStrategy{0.05, 4.0};
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = UniformStrategy{0.5, 0.0};
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{};
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{{{1.0, 0.5, 3.0}}};
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{{{0.5, 1.2, 3.0}, {1.0, 1.5, 6.0}}};  // overlap
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{{{1.0, 1.5, 3.0}, {0.5, 1.0, 6.0}}};  // unsorted
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{{{0.05, 1.0, 3.0}}};  // starts below r_p
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = MultiRangeStrategy{{{0.5, 1.0, -1.0}}};
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
  c.strategy = two_ranges();
  CHECK_NOTHROW(c.validate());
  CHECK(c.subgroup_count() == 2);
  CHECK(c.margin(2) == 9.0);
  CHECK(c.first_negative_bound() == 0.5);
  c.depth_loss_weight = -1.0;
  CHECK_THROWS_CODE(c.validate(), ErrorCode::InvalidConfig);
}

TEST_CASE("identify dispatch and counters") {
  const Grid1 d(1, 5, {0.05, 0.3, 0.7, 1.2, 2.5});
  RegConfig u;
  const IdentMap mu = identify(d, u);
  CHECK(mu.count_positive() == 1);
  CHECK(mu.count_ignored() == 1);
  CHECK(mu.count_negative(1) == 3);

  RegConfig m;
  m.strategy = two_ranges();
  const IdentMap mm = identify(d, m);
  CHECK(mm.count_negative(1) == 1);
  CHECK(mm.count_negative(2) == 1);
  CHECK(mm.count_ignored() == 2);

  RegConfig none;
  none.strategy = NoRegularization{};
  CHECK(identify(d, none).count_ignored() == 5);
}

TEST_CASE("raising r_p never turns a positive into a negative") {
  const Grid1 d = testutil::random_depth(8, 8, 4, 0.0, 2.0);
  const IdentMap lo = identify_uniform(d, 0.1, 0.5);
  const IdentMap hi = identify_uniform(d, 0.3, 0.5);
  for (std::size_t p = 0; p < d.pixels(); ++p) {
    if (lo[p].is_positive()) CHECK(hi[p].is_positive());
    if (lo[p].is_negative() || hi[p].is_negative()) CHECK(lo[p] == hi[p]);
  }
}

TEST_CASE("single wide range matches uniform below its upper bound") {
  const Grid1 d = testutil::random_depth(8, 8, 9, 0.0, 1.9);
  const IdentMap u = identify_uniform(d, 0.1, 0.5);
  const IdentMap m = identify_multirange(d, 0.1, MultiRangeStrategy{{{0.5, 2.0, 4.0}}});
  CHECK(u == m);
}

TEST_CASE("SampleLabel encoding") {
  CHECK(SampleLabel::positive().subgroup() == 0);
  CHECK(SampleLabel::ignored().subgroup() == -1);
  CHECK(SampleLabel::negative(3).subgroup() == 3);
  CHECK_THROWS_CODE(SampleLabel::negative(0), ErrorCode::ContractViolation);
}

}  // TEST_SUITE
