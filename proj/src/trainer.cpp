#include "metricdepth/trainer.hpp"

#include <cmath>
#include <limits>

#include "metricdepth/error.hpp"
#include "metricdepth/sampling.hpp"
#include "reg_kernel.hpp"

namespace metricdepth {

namespace {

// Stream tags for mix_seed; each concern draws from its own stream so that
// changing one (e.g. the sample count) does not perturb the others.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kSamplingStream = 3;
constexpr std::uint64_t kPoolStream = 4;

}  // namespace

void Schedule::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning_rate must be >= 0");
  }
  if (train_scenes < 1) throw Error(ErrorCode::InvalidConfig, "train_scenes must be >= 1");
  if (eval_scenes < 1) throw Error(ErrorCode::InvalidConfig, "eval_scenes must be >= 1");
}

void SeparationParams::validate() const {
  if (!(near_below > 0.0) || !(far_above >= near_below)) {
    throw Error(ErrorCode::InvalidConfig, "separation thresholds need 0 < near_below <= far_above");
  }
  if (pairs < 1) throw Error(ErrorCode::InvalidConfig, "separation needs at least one pair");
}

void TrainConfig::validate() const {
  scene.validate();
  model.validate();
  reg.validate();
  depth_loss.validate();
  schedule.validate();
  separation.validate();
  if (model.input_channels != scene.input_channels) {
    throw Error(ErrorCode::InvalidConfig, "model input channels must match scene input channels");
  }
  if (reg.enabled() && reg.n_across > 0 && schedule.batch_size < 2) {
    throw Error(ErrorCode::InsufficientBatch, "across-batch sampling needs batch_size >= 2");
  }
}

double Schedule::learning_rate_at(std::size_t step) const noexcept {
  if (decay == LrDecay::Constant || steps == 0) return learning_rate;
  constexpr double kPi = 3.14159265358979323846;
  const double t = static_cast<double>(step) / static_cast<double>(steps);
  return learning_rate * 0.5 * (1.0 + std::cos(kPi * t));
}

const EvalRecord& TrainRecord::final_eval() const {
  if (evals.empty()) throw Error(ErrorCode::EmptyEvaluation, "training record has no evaluation");
  return evals.back();
}

double feature_separation(const Grid3& features, const Grid1& depth, const SeparationParams& params) {
  params.validate();
  if (!depth.same_extent(features)) throw Error(ErrorCode::ShapeError, "feature_separation: extents differ");
  std::vector<std::size_t> valid;
  for (std::size_t p = 0; p < depth.pixels(); ++p) {
    if (depth.valid(p)) valid.push_back(p);
  }
  if (valid.size() < 2) return std::numeric_limits<double>::infinity();

  SeedRng rng(params.seed);
  double near_sum = 0.0, far_sum = 0.0;
  std::size_t near_n = 0, far_n = 0;
  for (std::size_t k = 0; k < params.pairs; ++k) {
    const std::size_t a = valid[rng.uniform_below(valid.size())];
    const std::size_t b = valid[rng.uniform_below(valid.size())];
    if (a == b) continue;
    const double d_r = std::abs(depth.value(a) - depth.value(b));
    if (d_r < params.near_below) {
      near_sum += feat_distance(features.pixel(a), features.pixel(b));
      ++near_n;
    } else if (d_r > params.far_above) {
      far_sum += feat_distance(features.pixel(a), features.pixel(b));
      ++far_n;
    }
  }
  if (near_n == 0) return std::numeric_limits<double>::infinity();
  const double near_mean = near_sum / static_cast<double>(near_n);
  const double far_mean = far_n == 0 ? 0.0 : far_sum / static_cast<double>(far_n);
  if (near_mean == 0.0) {
    return far_mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return far_mean / near_mean;
}

std::vector<SyntheticScene> make_eval_scenes(const SceneParams& scene, const Schedule& schedule) {
  std::vector<SyntheticScene> out;
  out.reserve(schedule.eval_scenes);
  for (std::size_t i = 0; i < schedule.eval_scenes; ++i) {
    out.push_back(gen_scene(mix_seed(schedule.eval_seed, i), scene));
  }
  return out;
}

EvalRecord evaluate_model(const ToyModel& model, const std::vector<SyntheticScene>& scenes,
                          const SeparationParams& separation) {
  EvalRecord rec;
  MetricAccumulator acc;
  double sep_sum = 0.0;
  for (const auto& scene : scenes) {
    const auto out = model.forward(scene.image);
    acc.add(out.pred, scene.depth);
    sep_sum += feature_separation(out.features, scene.depth, separation);
  }
  rec.metrics = acc.report();
  rec.separation = scenes.empty() ? 0.0 : sep_sum / static_cast<double>(scenes.size());
  return rec;
}

BatchLoss batch_loss(const ToyModel& model, const std::vector<const SyntheticScene*>& batch,
                     const TrainConfig& config, SeedRng sampling) {
  const std::size_t k = batch.size();
  if (k == 0) throw Error(ErrorCode::InsufficientBatch, "empty training batch");
  const double inv_k = 1.0 / static_cast<double>(k);

  std::vector<ToyModel::Output> outs;
  outs.reserve(k);
  for (const auto* scene : batch) outs.push_back(model.forward(scene->image));

  BatchLoss result;
  std::vector<Grid3> grad_feat;
  std::vector<std::vector<double>> grad_pred(k);
  grad_feat.reserve(k);
  for (std::size_t a = 0; a < k; ++a) {
    grad_feat.emplace_back(outs[a].features.height(), outs[a].features.width(),
                           outs[a].features.channels());
    const auto si = si_loss(outs[a].pred, batch[a]->depth, config.depth_loss);
    result.l_depth += inv_k * si.value;
    grad_pred[a] = si.grad;
    for (auto& g : grad_pred[a]) g *= config.reg.depth_loss_weight * inv_k;
  }

  if (config.reg.enabled() && config.reg.n_within + config.reg.n_across > 0) {
    for (std::size_t a = 0; a < k; ++a) {
      const auto& f_a = outs[a].features;
      const auto& d_a = batch[a]->depth;
      // Same draws as build_sample_set, but the samples are read in place.
      auto plan = plan_within(f_a.height(), f_a.width(), config.reg.n_within, sampling);
      for (auto& p : plan_across(k, a, config.reg.n_across, sampling)) plan.push_back(p);
      std::vector<detail::SampleView> views;
      views.reserve(plan.size());
      for (const auto& prov : plan) {
        if (const auto* w = std::get_if<WithinShift>(&prov)) {
          views.push_back({&f_a, &d_a, w->shift_h, w->shift_w, &grad_feat[a]});
        } else {
          const std::size_t idx = std::get<AcrossBatch>(prov).batch_index;
          views.push_back({&outs[idx].features, &batch[idx]->depth, 0, 0, &grad_feat[idx]});
        }
      }
      const auto reg = detail::reg_loss_views(f_a, d_a, views, config.reg, inv_k, grad_feat[a],
                                              testing::Fault::None);
      result.l_re += inv_k * reg.total;
      result.contributing_count += reg.contributing_count;
      result.ignored_count += reg.ignored_count;
    }
  }
  result.l_final = result.l_re + config.reg.depth_loss_weight * result.l_depth;

  result.grad.assign(model.parameters().size(), 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    const auto g = model.backward(outs[a], grad_feat[a], grad_pred[a]);
    for (std::size_t i = 0; i < g.size(); ++i) result.grad[i] += g[i];
  }
  return result;
}

TrainRecord train_run(const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& sched = config.schedule;

  TrainRecord rec;
  rec.seed = seed;
  // Start the head at the geometric midpoint of the scene depth range.
  const double head_bias = 0.5 * (std::log(config.scene.d_min) + std::log(config.scene.d_max));
  ToyModel model(config.model, mix_seed(seed, kInitStream), head_bias);
  SeedRng batch_rng(mix_seed(seed, kBatchStream));
  SeedRng sampling_rng(mix_seed(seed, kSamplingStream));

  std::vector<SyntheticScene> pool;
  pool.reserve(sched.train_scenes);
  for (std::size_t i = 0; i < sched.train_scenes; ++i) {
    pool.push_back(gen_scene(mix_seed(mix_seed(seed, kPoolStream), i), config.scene));
  }
  const auto eval_set = make_eval_scenes(config.scene, sched);

  auto evaluate = [&](std::size_t step) {
    EvalRecord e = evaluate_model(model, eval_set, config.separation);
    e.step = step;
    rec.evals.push_back(e);
  };

  rec.steps.reserve(sched.steps);
  try {
    for (std::size_t step = 0; step < sched.steps; ++step) {
      std::vector<const SyntheticScene*> batch;
      batch.reserve(sched.batch_size);
      for (std::size_t b = 0; b < sched.batch_size; ++b) {
        batch.push_back(&pool[batch_rng.uniform_below(pool.size())]);
      }
      BatchLoss loss = batch_loss(model, batch, config, sampling_rng.split());
      rec.steps.push_back({step, loss.l_re, loss.l_depth, loss.l_final, loss.contributing_count,
                           loss.contributing_count + loss.ignored_count == 0
                               ? 0.0
                               : static_cast<double>(loss.ignored_count) /
                                     static_cast<double>(loss.contributing_count + loss.ignored_count)});
      if (!std::isfinite(loss.l_final)) {
        throw Error(ErrorCode::Divergence, "non-finite loss at step " + std::to_string(step));
      }
      const double lr = sched.learning_rate_at(step);
      auto params = model.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * loss.grad[i];
      if (sched.eval_every > 0 && (step + 1) % sched.eval_every == 0 && step + 1 != sched.steps) {
        evaluate(step + 1);
      }
    }
    evaluate(sched.steps);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Divergence && e.code() != ErrorCode::NonFinite) throw;
    rec.diverged = true;
    rec.diagnostic = e.what();
  }
  const auto params = model.parameters();
  rec.final_parameters.assign(params.begin(), params.end());
  return rec;
}

std::string train_steps_csv(const TrainRecord& record) {
  std::string out = "step,l_re,l_depth,l_final,contributing,ignored_fraction\n";
  for (const auto& s : record.steps) {
    out += std::to_string(s.step) + ',' + format_real(s.l_re) + ',' + format_real(s.l_depth) + ',' +
           format_real(s.l_final) + ',' + std::to_string(s.contributing_count) + ',' +
           format_real(s.ignored_fraction) + '\n';
  }
  return out;
}

std::string train_evals_csv(const TrainRecord& record) {
  std::string out = "step," + MetricReport::csv_header() + ",separation\n";
  for (const auto& e : record.evals) {
    out += std::to_string(e.step) + ',' + e.metrics.csv_row() + ',' + format_real(e.separation) + '\n';
  }
  return out;
}

}  // namespace metricdepth
