#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "metricdepth/model.hpp"
#include "metricdepth/scene.hpp"
#include "metricdepth/trainer.hpp"

using namespace metricdepth;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.scene.height = 16;
  c.scene.width = 16;
  c.model.hidden = 8;
  c.model.feature_channels = 4;
  c.reg.n_within = 3;
  c.reg.n_across = 2;
  c.schedule.steps = 12;
  c.schedule.batch_size = 3;
  c.schedule.learning_rate = 0.01;
  c.schedule.train_scenes = 4;
  c.schedule.eval_scenes = 2;
  c.schedule.eval_every = 5;
  c.separation.pairs = 256;
  return c;
}

}  // namespace

TEST_SUITE("toybench") {

TEST_CASE("gen_scene is deterministic") {
  const SceneParams p;
  const SyntheticScene a = gen_scene(12345, p);
  const SyntheticScene b = gen_scene(12345, p);
  CHECK(a.image == b.image);
  CHECK(a.depth == b.depth);
  CHECK(a.seed == 12345);
  CHECK_FALSE(gen_scene(12346, p).depth == a.depth);
}

TEST_CASE("gen_scene ranges and coverage over 1000 seeds") {
  const SceneParams p;
  double coverage = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const SyntheticScene sc = gen_scene(s, p);
    REQUIRE(sc.depth.valid_count() == sc.depth.pixels());
    const auto [lo, hi] = std::minmax_element(sc.depth.values().begin(), sc.depth.values().end());
    REQUIRE(*lo >= p.d_min);
    REQUIRE(*hi <= p.d_max);
    const auto [ilo, ihi] = std::minmax_element(sc.image.data().begin(), sc.image.data().end());
    REQUIRE(*ilo >= 0.0);
    REQUIRE(*ihi <= 1.0);
    coverage += (*hi - *lo) / (p.d_max - p.d_min);
  }
  CHECK(coverage / 1000.0 >= 0.5);
}

TEST_CASE("gen_scene validation") {
  SceneParams p;
  p.height = 7;
  CHECK_THROWS_CODE(gen_scene(1, p), ErrorCode::InvalidConfig);
  p = SceneParams{};
  p.d_min = 2.0;
  p.d_max = 1.0;
  CHECK_THROWS_CODE(gen_scene(1, p), ErrorCode::InvalidConfig);
  p.d_min = 0.0;
  p.d_max = 1.0;
  CHECK_THROWS_CODE(gen_scene(1, p), ErrorCode::InvalidConfig);
}

TEST_CASE("untrained head predicts exp(0)") {
  const ModelShape shape;
  const ToyModel m(shape, 3);
  CHECK(shape.parameter_count() < 10000);
  CHECK(m.parameters().size() == shape.parameter_count());
  const SyntheticScene sc = gen_scene(1, SceneParams{});
  const auto out = m.forward(sc.image);
  for (double v : out.pred.values()) CHECK(v == 1.0);
  CHECK(out.features.channels() == shape.feature_channels);

  const auto again = m.forward(sc.image);
  CHECK(again.features == out.features);
  CHECK(again.pred == out.pred);
}

TEST_CASE("model shape errors") {
  CHECK_THROWS_CODE(ToyModel(ModelShape{3, 100, 8}, 1), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(ToyModel(ModelShape{3, 0, 8}, 1), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(ToyModel(ModelShape{}, std::vector<double>(3)), ErrorCode::ShapeError);
  const ToyModel m(ModelShape{}, 1);
  CHECK_THROWS_CODE(m.forward(Grid3(4, 4, 2)), ErrorCode::ShapeError);
}

TEST_CASE("model backward matches finite differences") {
  SceneParams sp;
  sp.height = sp.width = 8;
  const SyntheticScene sc = gen_scene(5, sp);
  ToyModel m(ModelShape{3, 6, 4}, 9, 0.3);
  SeedRng rng(4);
  for (double& p : m.parameters()) p += rng.uniform(-0.2, 0.2);

  // L = sum_p (a . f_p) + sum_p b_p * pred_p with fixed random a, b.
  const std::vector<double> a{0.3, -0.7, 0.2, 0.5};
  std::vector<double> b(64);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);
  auto loss = [&](const ToyModel& model) {
    const auto out = model.forward(sc.image);
    double l = 0.0;
    for (std::size_t p = 0; p < 64; ++p) {
      for (std::size_t c = 0; c < 4; ++c) l += a[c] * out.features.pixel(p)[c];
      l += b[p] * out.pred.value(p);
    }
    return l;
  };
  const auto out = m.forward(sc.image);
  Grid3 gf(8, 8, 4);
  for (std::size_t p = 0; p < 64; ++p) {
    for (std::size_t c = 0; c < 4; ++c) gf.pixel(p)[c] = a[c];
  }
  const auto grad = m.backward(out, gf, b);
  auto params = m.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + 1e-6;
    const double up = loss(m);
    params[k] = saved - 1e-6;
    const double down = loss(m);
    params[k] = saved;
    const double numeric = (up - down) / 2e-6;
    CHECK(std::abs(grad[k] - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("feature_separation guards and ordering") {
  const SeparationParams sp;
  const Grid1 depth = testutil::random_depth(8, 8, 3, 0.5, 4.0);
  Grid3 constant(8, 8, 3);
  for (double& v : constant.data()) v = 0.5;
  CHECK(feature_separation(constant, depth, sp) == 1.0);

  Grid3 broadcast(8, 8, 3);
  for (std::size_t p = 0; p < 64; ++p) {
    for (std::size_t c = 0; c < 3; ++c) broadcast.pixel(p)[c] = depth.value(p);
  }
  CHECK(feature_separation(broadcast, depth, sp) > 1.0);

  // Every pair differs by exactly 1 m: no near pairs.
  std::vector<double> stripes(64);
  for (std::size_t p = 0; p < 64; ++p) stripes[p] = 1.0 + static_cast<double>(p % 2) * 1.0;
  const Grid1 two_levels(8, 8, stripes);
  Grid3 f = testutil::random_grid3(8, 8, 3, 4);
  // Same-level pairs exist (differential 0), so use a map with one pixel per level.
  const Grid1 pair_depth(1, 2, {1.0, 2.0});
  CHECK(std::isinf(feature_separation(Grid3(1, 2, 1, {0.0, 1.0}), pair_depth, sp)));
  CHECK(std::isfinite(feature_separation(f, two_levels, sp)));
  CHECK_THROWS_CODE(feature_separation(Grid3(2, 2, 1), depth, sp), ErrorCode::ShapeError);
}

TEST_CASE("train_run is a pure function of config and seed") {
  const TrainConfig c = tiny_config();
  const TrainRecord a = train_run(c, 7);
  const TrainRecord b = train_run(c, 7);
  CHECK_FALSE(a.diverged);
  CHECK(a.steps.size() == c.schedule.steps);
  REQUIRE(a.evals.size() == 3);  // after steps 5, 10 and the final one
  CHECK(a.evals[0].step == 5);
  CHECK(a.evals.back().step == 12);
  CHECK(a.final_parameters == b.final_parameters);
  CHECK(train_steps_csv(a) == train_steps_csv(b));
  CHECK(train_evals_csv(a) == train_evals_csv(b));
  CHECK(train_run(c, 8).final_parameters != a.final_parameters);
}

TEST_CASE("zero learning rate leaves the model and a fixed batch's loss unchanged") {
  TrainConfig c = tiny_config();
  c.schedule.learning_rate = 0.0;
  c.schedule.train_scenes = 1;
  c.schedule.batch_size = 1;
  c.reg.strategy = NoRegularization{};
  const TrainRecord r = train_run(c, 3);
  for (const auto& s : r.steps) {
    CHECK(s.l_final == r.steps.front().l_final);
    CHECK(s.l_depth == r.steps.front().l_depth);
  }
  CHECK(r.evals.front().metrics == r.evals.back().metrics);

  TrainConfig reg = tiny_config();
  reg.schedule.learning_rate = 0.0;
  const TrainRecord rr = train_run(reg, 3);
  const double head_bias = 0.5 * (std::log(reg.scene.d_min) + std::log(reg.scene.d_max));
  const ToyModel init(reg.model, mix_seed(3, 1), head_bias);
  CHECK(std::equal(rr.final_parameters.begin(), rr.final_parameters.end(), init.parameters().begin()));
}

TEST_CASE("across-batch sampling needs K >= 2") {
  TrainConfig c = tiny_config();
  c.schedule.batch_size = 1;
  CHECK_THROWS_CODE(train_run(c, 1), ErrorCode::InsufficientBatch);
  c.reg.n_across = 0;
  CHECK_NOTHROW(train_run(c, 1));
}

TEST_CASE("regularization engages on synthetic scenes") {
  TrainConfig c = tiny_config();
  c.scene.height = c.scene.width = 32;
  c.reg.strategy = MultiRangeStrategy{{{0.5, 1.0, 3.0}, {1.0, 1.5, 6.0}, {1.5, 2.0, 8.0}}};
  c.reg.n_within = 10;
  c.reg.n_across = 2;
  const TrainRecord r = train_run(c, 2);
  for (const auto& s : r.steps) {
    CHECK(s.ignored_fraction < 0.95);
    CHECK(s.contributing_count > 0);
    CHECK(s.l_re > 0.0);
  }
}

TEST_CASE("divergence is recorded rather than thrown") {
  TrainConfig c = tiny_config();
  c.schedule.learning_rate = 1e6;
  const TrainRecord r = train_run(c, 1);
  CHECK(r.diverged);
  CHECK_FALSE(r.diagnostic.empty());
  CHECK(r.steps.size() < c.schedule.steps + 1);
}

TEST_CASE("cosine schedule") {
  Schedule s;
  s.steps = 100;
  s.learning_rate = 0.2;
  CHECK(s.learning_rate_at(0) == 0.2);
  CHECK(s.learning_rate_at(50) == doctest::Approx(0.1));
  CHECK(s.learning_rate_at(99) < 0.001);
  s.decay = LrDecay::Constant;
  CHECK(s.learning_rate_at(99) == 0.2);
}

TEST_CASE("batch_loss leaves the sampling stream untouched") {
  const TrainConfig c = tiny_config();
  const SyntheticScene s0 = gen_scene(1, c.scene), s1 = gen_scene(2, c.scene);
  const ToyModel m(c.model, 4, 1.0);
  const SeedRng rng(77);
  const BatchLoss a = batch_loss(m, {&s0, &s1}, c, rng);
  const BatchLoss b = batch_loss(m, {&s0, &s1}, c, rng);
  CHECK(a.l_final == b.l_final);
  CHECK(a.grad == b.grad);
  CHECK(a.l_final == doctest::Approx(a.l_re + a.l_depth));
}

}  // TEST_SUITE
