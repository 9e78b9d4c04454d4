#include "metricdepth/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "metricdepth/error.hpp"
#include "metricdepth/metrics.hpp"
#include "metricdepth/model.hpp"
#include "metricdepth/rng.hpp"
#include "metricdepth/sampling.hpp"
#include "metricdepth/scene.hpp"
#include "metricdepth/trainer.hpp"

namespace metricdepth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RegConfig uniform_config() {
  RegConfig c;
  c.r_p = 0.1;
  c.strategy = UniformStrategy{0.5, 4.0};
  return c;
}

RegConfig multirange_config() {
  RegConfig c;
  c.r_p = 0.1;
  c.strategy = MultiRangeStrategy{{{0.5, 1.0, 3.0}, {1.0, 1.5, 6.0}, {1.5, 2.0, 8.0}}};
  return c;
}

Grid3 random_features(std::size_t h, std::size_t w, std::size_t c, double scale, SeedRng& rng) {
  Grid3 g(h, w, c);
  for (double& v : g.data()) v = rng.uniform(-scale, scale);
  return g;
}

// Depths on a 5 cm lattice so differentials land exactly on thresholds
// now and then; roughly one pixel in ten is invalid.
Grid1 random_depth(std::size_t h, std::size_t w, bool quantized, SeedRng& rng) {
  std::vector<double> values(h * w);
  std::vector<std::uint8_t> valid(h * w);
  for (std::size_t p = 0; p < h * w; ++p) {
    values[p] = quantized ? 0.5 + 0.05 * static_cast<double>(rng.uniform_below(61))
                          : rng.uniform(0.5, 3.5);
    valid[p] = rng.uniform01() < 0.9 ? 1 : 0;
  }
  return Grid1(h, w, std::move(values), std::move(valid));
}

bool near_kink(double dist, SampleLabel label, const RegConfig& config, double guard) {
  if (label.is_ignored()) return false;
  if (label.is_positive()) return dist < guard;
  return std::abs(dist - config.margin(label.subgroup())) < guard;
}

SuiteCheck reg_gradcheck(const std::string& name, const RegConfig& base, std::uint64_t stream,
                         const GradcheckOptions& opt) {
  SuiteCheck check{name, opt.trials, 0, 0, 0.0, opt.tolerance};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    SeedRng rng(mix_seed(mix_seed(opt.seed, stream), t));
    const std::size_t h = 1 + rng.uniform_below(4);
    const std::size_t w = 1 + rng.uniform_below(4);
    const std::size_t c = 1 + rng.uniform_below(5);
    const std::size_t ns = 1 + rng.uniform_below(3);

    Grid3 f_a = random_features(h, w, c, 2.0, rng);
    const Grid1 d_a = random_depth(h, w, false, rng);
    SampleSet samples;
    for (std::size_t n = 0; n < ns; ++n) {
      Grid3 f = random_features(h, w, c, 2.0, rng);
      samples.pairs.push_back({std::move(f), random_depth(h, w, false, rng), WithinShift{0, 0}});
    }
    RegConfig config = base;
    config.loss_reduction = t % 2 == 0 ? LossReduction::MeanOverContributing : LossReduction::Sum;

    // Pixels whose hinge or norm kink lies within the guard band.
    std::vector<std::uint8_t> anchor_kink(h * w, 0);
    std::vector<std::vector<std::uint8_t>> sample_kink(ns, std::vector<std::uint8_t>(h * w, 0));
    for (std::size_t n = 0; n < ns; ++n) {
      const auto& s = samples.pairs[n];
      for (std::size_t p = 0; p < h * w; ++p) {
        if (!d_a.valid(p) || !s.depth.valid(p)) continue;
        const auto label = classify_differential(std::abs(d_a.value(p) - s.depth.value(p)),
                                                 config.r_p, config.strategy);
        if (near_kink(feat_distance(f_a.pixel(p), s.feature.pixel(p)), label, config,
                      opt.kink_guard)) {
          anchor_kink[p] = sample_kink[n][p] = 1;
        }
      }
    }

    const auto loss = [&] {
      return testing::reg_loss_with_fault(f_a, d_a, samples, config, testing::Fault::None).total;
    };
    const LossResult analytic = testing::reg_loss_with_fault(f_a, d_a, samples, config, opt.fault);

    auto probe = [&](Grid3& map, const Grid3& grad, const std::vector<std::uint8_t>& kinks) {
      auto data = map.data();
      for (std::size_t k = 0; k < data.size(); ++k) {
        if (kinks[k / c]) {
          ++check.excluded;
          continue;
        }
        const double saved = data[k];
        data[k] = saved + opt.step;
        const double up = loss();
        data[k] = saved - opt.step;
        const double down = loss();
        data[k] = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        check.max_error = std::max(
            check.max_error, relative_error(grad.data()[k], numeric, opt.magnitude_floor));
        ++check.compared;
      }
    };
    probe(f_a, analytic.grad_anchor, anchor_kink);
    for (std::size_t n = 0; n < ns; ++n) {
      probe(samples.pairs[n].feature, analytic.grad_samples[n], sample_kink[n]);
    }
  }
  return check;
}

SuiteCheck si_gradcheck(const GradcheckOptions& opt) {
  SuiteCheck check{"si_loss", opt.trials, 0, 0, 0.0, opt.tolerance};
  const DepthLossParams params;
  for (std::size_t t = 0; t < opt.trials; ++t) {
    SeedRng rng(mix_seed(mix_seed(opt.seed, 3), t));
    const std::size_t h = 1 + rng.uniform_below(4);
    const std::size_t w = 1 + rng.uniform_below(4);
    std::vector<double> pv(h * w);
    for (double& v : pv) v = rng.uniform(0.3, 5.0);
    Grid1 pred(h, w, std::move(pv));
    const Grid1 gt = random_depth(h, w, false, rng);

    const auto analytic = si_loss(pred, gt, params);
    // sqrt is not differentiable where the variance term vanishes.
    if (analytic.value < 1e-6) continue;
    for (std::size_t p = 0; p < pred.pixels(); ++p) {
      const double saved = pred.value(p);
      pred.value(p) = saved + opt.step;
      const double up = si_loss(pred, gt, params).value;
      pred.value(p) = saved - opt.step;
      const double down = si_loss(pred, gt, params).value;
      pred.value(p) = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      check.max_error =
          std::max(check.max_error, relative_error(analytic.grad[p], numeric, opt.magnitude_floor));
      ++check.compared;
    }
  }
  return check;
}

// True when some (anchor, sample, pixel) term of the batch loss sits within
// `guard` of a kink, replaying the sample draws batch_loss will make.
bool batch_near_kink(const ToyModel& model, const std::vector<const SyntheticScene*>& batch,
                     const TrainConfig& config, SeedRng sampling, double guard) {
  if (!config.reg.enabled()) return false;
  std::vector<ToyModel::Output> outs;
  for (const auto* s : batch) outs.push_back(model.forward(s->image));
  for (std::size_t a = 0; a < batch.size(); ++a) {
    const auto& f_a = outs[a].features;
    const auto& d_a = batch[a]->depth;
    auto plan = plan_within(f_a.height(), f_a.width(), config.reg.n_within, sampling);
    for (auto& p : plan_across(batch.size(), a, config.reg.n_across, sampling)) plan.push_back(p);
    for (const auto& prov : plan) {
      Grid3 f_s = f_a;
      Grid1 d_s = d_a;
      if (const auto* ws = std::get_if<WithinShift>(&prov)) {
        f_s = shift2d(f_a, ws->shift_h, ws->shift_w);
        d_s = shift2d(d_a, ws->shift_h, ws->shift_w);
      } else {
        const std::size_t idx = std::get<AcrossBatch>(prov).batch_index;
        f_s = outs[idx].features;
        d_s = batch[idx]->depth;
      }
      for (std::size_t p = 0; p < f_a.pixels(); ++p) {
        const auto label = classify_differential(std::abs(d_a.value(p) - d_s.value(p)),
                                                 config.reg.r_p, config.reg.strategy);
        if (near_kink(feat_distance(f_a.pixel(p), f_s.pixel(p)), label, config.reg, guard)) {
          return true;
        }
      }
    }
  }
  return false;
}

SuiteCheck model_gradcheck(const GradcheckOptions& opt) {
  SuiteCheck check{"model", opt.model_trials, 0, 0, 0.0, opt.model_tolerance};
  SceneParams scene;
  scene.height = 8;
  scene.width = 8;
  const RegConfig strategies[] = {uniform_config(), multirange_config(), RegConfig{}};

  for (std::size_t t = 0; t < opt.model_trials; ++t) {
    TrainConfig config;
    config.scene = scene;
    config.reg = strategies[t % 3];
    if (t % 3 == 2) config.reg.strategy = NoRegularization{};
    config.reg.n_within = 2;
    config.reg.n_across = 1;
    config.reg.loss_reduction = t % 2 == 0 ? LossReduction::MeanOverContributing : LossReduction::Sum;
    config.schedule.batch_size = 2;

    // Reseed until no term is near a kink. Parameter steps move every
    // feature, so the guard is widened relative to the reg_loss suite.
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == 64) throw Error(ErrorCode::ContractViolation, "model gradcheck: no kink-free instance");
      const std::uint64_t s = mix_seed(mix_seed(opt.seed, 4), t * 1000 + attempt);
      const SyntheticScene s0 = gen_scene(mix_seed(s, 0), scene);
      const SyntheticScene s1 = gen_scene(mix_seed(s, 1), scene);
      const std::vector<const SyntheticScene*> batch = {&s0, &s1};
      ToyModel model(config.model, mix_seed(s, 2), 1.0);
      // Give the head non-zero weights so gradients reach every layer.
      SeedRng head(mix_seed(s, 3));
      auto params = model.parameters();
      const std::size_t cf = config.model.feature_channels;
      for (std::size_t r = 0; r < cf; ++r) params[params.size() - 1 - cf + r] = head.uniform(-0.3, 0.3);
      const SeedRng sampling(mix_seed(s, 4));

      if (batch_near_kink(model, batch, config, sampling, 10.0 * opt.kink_guard)) {
        ++check.excluded;
        continue;
      }

      const BatchLoss analytic = batch_loss(model, batch, config, sampling);
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + opt.step;
        const double up = batch_loss(model, batch, config, sampling).l_final;
        params[k] = saved - opt.step;
        const double down = batch_loss(model, batch, config, sampling).l_final;
        params[k] = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        check.max_error =
            std::max(check.max_error, relative_error(analytic.grad[k], numeric, opt.magnitude_floor));
        ++check.compared;
      }
      break;
    }
  }
  return check;
}

// ---- oracles ---------------------------------------------------------------

struct OracleTotals {
  double total = 0.0;
  std::size_t contributing = 0;
  std::size_t ignored = 0;
};

// Margin for differential dr under the strategy, or a negative value when
// dr is not in any negative region. Written out independently of identify.
double oracle_negative_margin(double dr, const RegConfig& config) {
  if (const auto* u = std::get_if<UniformStrategy>(&config.strategy)) {
    return dr > u->r_n ? u->margin : -1.0;
  }
  if (const auto* m = std::get_if<MultiRangeStrategy>(&config.strategy)) {
    for (const auto& r : m->ranges) {
      if (r.low < dr && dr < r.high) return r.margin;
    }
  }
  return -1.0;
}

// Sum-reduced regularization loss straight from the raw batch. Also checks
// that each materialized sample equals the raw shifted source; a mismatch
// returns NaN so the comparison fails.
OracleTotals oracle_reg_loss(const std::vector<BatchItem>& items, std::size_t anchor,
                             const SampleSet& samples, const RegConfig& config) {
  const Grid3& fa = items[anchor].feature;
  const Grid1& da = items[anchor].depth;
  const std::size_t H = fa.height(), W = fa.width(), C = fa.channels(), K = items.size();
  OracleTotals out;
  for (const auto& pair : samples.pairs) {
    std::size_t src = anchor, sh = 0, sw = 0;
    if (const auto* ws = std::get_if<WithinShift>(&pair.provenance)) {
      sh = static_cast<std::size_t>(ws->shift_h);
      sw = static_cast<std::size_t>(ws->shift_w);
    } else {
      src = (anchor + static_cast<std::size_t>(std::get<AcrossBatch>(pair.provenance).offset)) % K;
    }
    const Grid3& fs = items[src].feature;
    const Grid1& ds = items[src].depth;
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        const std::size_t si = (i + H - sh) % H;
        const std::size_t sj = (j + W - sw) % W;
        if (pair.depth.value(i, j) != ds.value(si, sj) || pair.depth.valid(i, j) != ds.valid(si, sj)) {
          out.total = std::nan("");
          return out;
        }
        if (!da.valid(i, j) || !ds.valid(si, sj)) {
          ++out.ignored;
          continue;
        }
        const double dr = std::fabs(da.value(i, j) - ds.value(si, sj));
        const bool positive = dr < config.r_p;
        const double margin = oracle_negative_margin(dr, config);
        if (!positive && margin < 0.0) {
          ++out.ignored;
          continue;
        }
        double sq = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          if (pair.feature.at(i, j, c) != fs.at(si, sj, c)) {
            out.total = std::nan("");
            return out;
          }
          const double diff = fa.at(i, j, c) - fs.at(si, sj, c);
          sq += diff * diff;
        }
        const double dist = std::sqrt(sq);
        out.total += positive ? dist : std::max(0.0, margin - dist);
        ++out.contributing;
      }
    }
  }
  return out;
}

SuiteCheck reg_oracle(const OracleOptions& opt) {
  SuiteCheck check{"oracle/reg_loss", opt.trials, 0, 0, 0.0, opt.tolerance};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    SeedRng rng(mix_seed(mix_seed(opt.seed, 11), t));
    const std::size_t K = 2 + rng.uniform_below(3);
    const std::size_t H = 2 + rng.uniform_below(7);
    const std::size_t W = 2 + rng.uniform_below(7);
    const std::size_t C = 1 + rng.uniform_below(5);
    std::vector<BatchItem> items;
    for (std::size_t k = 0; k < K; ++k) {
      Grid3 f = random_features(H, W, C, 3.0, rng);
      items.push_back({std::move(f), random_depth(H, W, true, rng)});
    }
    const std::size_t anchor = rng.uniform_below(K);
    const std::size_t n_within = rng.uniform_below(6);
    const std::size_t n_across = rng.uniform_below(4);
    RegConfig config = t % 2 == 0 ? uniform_config() : multirange_config();
    config.loss_reduction = LossReduction::Sum;

    const Batch batch(items);
    SeedRng sampling(rng.next_u64());
    const SampleSet samples = build_sample_set(items[anchor].feature, items[anchor].depth, batch,
                                               anchor, n_within, n_across, sampling);
    const LossResult lib = testing::reg_loss_with_fault(items[anchor].feature, items[anchor].depth,
                                                        samples, config, opt.fault);
    const OracleTotals ref = oracle_reg_loss(items, anchor, samples, config);

    double err = relative_error(lib.total, ref.total);
    if (std::isnan(err) || lib.contributing_count != ref.contributing ||
        lib.ignored_count != ref.ignored) {
      err = kInf;
    }
    check.max_error = std::max(check.max_error, err);
    ++check.compared;
  }
  return check;
}

MetricReport oracle_metrics(const Grid1& pred, const Grid1& gt, bool& empty) {
  std::vector<std::pair<double, double>> px;
  for (std::size_t p = 0; p < gt.pixels(); ++p) {
    if (pred.valid(p) && gt.valid(p) && gt.value(p) > 0.0 && pred.value(p) > 0.0) {
      px.emplace_back(pred.value(p), gt.value(p));
    }
  }
  empty = px.empty();
  MetricReport r;
  if (empty) return r;
  const double n = static_cast<double>(px.size());
  double s = 0.0;
  for (auto [d, g] : px) s += std::fabs(d - g) / g;
  r.abs_rel = s / n;
  s = 0.0;
  for (auto [d, g] : px) s += (d - g) * (d - g) / g;
  r.sq_rel = s / n;
  s = 0.0;
  for (auto [d, g] : px) s += (d - g) * (d - g);
  r.rmse = std::sqrt(s / n);
  s = 0.0;
  for (auto [d, g] : px) s += (std::log(d) - std::log(g)) * (std::log(d) - std::log(g));
  r.rmse_log = std::sqrt(s / n);
  s = 0.0;
  for (auto [d, g] : px) s += std::fabs(std::log10(d) - std::log10(g));
  r.log10 = s / n;
  double* deltas[] = {&r.delta1, &r.delta2, &r.delta3};
  for (int j = 1; j <= 3; ++j) {
    std::size_t hits = 0;
    for (auto [d, g] : px) hits += std::max(d / g, g / d) < std::pow(1.25, j) ? 1 : 0;
    *deltas[j - 1] = static_cast<double>(hits) / n;
  }
  r.pixel_count = px.size();
  return r;
}

SuiteCheck metrics_oracle(const OracleOptions& opt) {
  SuiteCheck check{"oracle/compute_metrics", opt.trials, 0, 0, 0.0, opt.tolerance};
  for (std::size_t t = 0; t < opt.trials; ++t) {
    SeedRng rng(mix_seed(mix_seed(opt.seed, 12), t));
    const std::size_t H = 1 + rng.uniform_below(8);
    const std::size_t W = 1 + rng.uniform_below(8);
    std::vector<double> pv(H * W), gv(H * W);
    std::vector<std::uint8_t> pm(H * W), gm(H * W);
    for (std::size_t p = 0; p < H * W; ++p) {
      gv[p] = 0.25 * static_cast<double>(rng.uniform_below(41));  // includes gt = 0
      const double u = rng.uniform01();
      pv[p] = u < 0.2 ? gv[p] : u < 0.3 ? gv[p] * 1.25 : rng.uniform(0.1, 10.0);
      pm[p] = rng.uniform01() < 0.9;
      gm[p] = rng.uniform01() < 0.9;
    }
    const Grid1 pred(H, W, std::move(pv), std::move(pm));
    const Grid1 gt(H, W, std::move(gv), std::move(gm));

    bool empty = false;
    const MetricReport ref = oracle_metrics(pred, gt, empty);
    double err = 0.0;
    try {
      const MetricReport lib = compute_metrics(pred, gt);
      if (empty || lib.pixel_count != ref.pixel_count) {
        err = kInf;
      } else {
        const std::pair<double, double> pairs[] = {
            {lib.abs_rel, ref.abs_rel}, {lib.sq_rel, ref.sq_rel},   {lib.rmse, ref.rmse},
            {lib.rmse_log, ref.rmse_log}, {lib.log10, ref.log10}, {lib.delta1, ref.delta1},
            {lib.delta2, ref.delta2},   {lib.delta3, ref.delta3}};
        for (auto [a, b] : pairs) {
          err = std::max(err, relative_error(a, b));
          ++check.compared;
        }
      }
    } catch (const Error& e) {
      if (!empty || e.code() != ErrorCode::EmptyEvaluation) err = kInf;
    }
    check.max_error = std::max(check.max_error, err);
  }
  return check;
}

}  // namespace

double relative_error(double a, double b, double floor) {
  const double scale = std::max({std::fabs(a), std::fabs(b), floor});
  if (scale == 0.0) return 0.0;
  return std::fabs(a - b) / scale;
}

bool VerifyReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.passed(); });
}

std::string VerifyReport::text() const {
  std::string out;
  char line[256];
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-24s trials=%zu compared=%zu excluded=%zu max_rel_err=%.3e tol=%.1e %s\n",
                  c.name.c_str(), c.trials, c.compared, c.excluded, c.max_error, c.tolerance,
                  c.passed() ? "ok" : "FAIL");
    out += line;
  }
  return out;
}

VerifyReport run_gradcheck(const GradcheckOptions& options) {
  VerifyReport report;
  report.checks.push_back(reg_gradcheck("gradcheck/reg_uniform", uniform_config(), 1, options));
  report.checks.push_back(reg_gradcheck("gradcheck/reg_multirange", multirange_config(), 2, options));
  report.checks.push_back(si_gradcheck(options));
  report.checks.back().name = "gradcheck/si_loss";
  report.checks.push_back(model_gradcheck(options));
  report.checks.back().name = "gradcheck/model";
  return report;
}

VerifyReport run_oracle(const OracleOptions& options) {
  VerifyReport report;
  report.checks.push_back(reg_oracle(options));
  report.checks.push_back(metrics_oracle(options));
  return report;
}

}  // namespace metricdepth
