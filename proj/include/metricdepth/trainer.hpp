#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metricdepth/identify.hpp"
#include "metricdepth/metrics.hpp"
#include "metricdepth/model.hpp"
#include "metricdepth/regloss.hpp"
#include "metricdepth/rng.hpp"
#include "metricdepth/scene.hpp"

namespace metricdepth {

/// Step-size rule for plain gradient descent. Cosine anneals the rate from
/// learning_rate at step 0 towards 0 at the last step.
enum class LrDecay { Constant, Cosine };

struct Schedule {
  std::size_t steps = 2000;
  std::size_t batch_size = 4;
  double learning_rate = 0.01;
  LrDecay decay = LrDecay::Cosine;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t train_scenes = 32;      // fixed training pool per seed
  std::size_t eval_scenes = 8;        // held-out set, shared by all runs
  std::uint64_t eval_seed = 900001;   // root seed of the held-out set
  std::size_t eval_every = 500;       // 0: evaluate only after the last step

  void validate() const;
  double learning_rate_at(std::size_t step) const noexcept;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Thresholds for the feature separation diagnostic. Kept separate from the
/// regularization config so baseline and regularized runs are scored alike.
struct SeparationParams {
  double near_below = 0.1;   // pairs with differential < near_below
  double far_above = 0.5;    // pairs with differential > far_above
  std::size_t pairs = 4096;
  std::uint64_t seed = 7;

  void validate() const;
  friend bool operator==(const SeparationParams&, const SeparationParams&) = default;
};

struct TrainConfig {
  SceneParams scene;
  ModelShape model;
  RegConfig reg;
  DepthLossParams depth_loss;
  Schedule schedule;
  SeparationParams separation;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct StepRecord {
  std::size_t step = 0;
  double l_re = 0.0;
  double l_depth = 0.0;
  double l_final = 0.0;
  std::size_t contributing_count = 0;
  double ignored_fraction = 0.0;
};

struct EvalRecord {
  std::size_t step = 0;  // number of updates applied before evaluation
  MetricReport metrics;
  double separation = 0.0;
};

struct TrainRecord {
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;  // last entry is the final model
  bool diverged = false;
  std::string diagnostic;
  std::vector<double> final_parameters;

  const EvalRecord& final_eval() const;
};

/// Ratio of mean feature distance over sampled pixel pairs with depth
/// differential > far_above to the mean over pairs with differential
/// < near_below. Pairs are drawn uniformly (with a fixed seed) from all
/// valid pixel pairs. Returns +inf when no near pair was drawn and 1 when
/// both means are zero.
double feature_separation(const Grid3& features, const Grid1& depth, const SeparationParams& params);

/// Pooled metrics and mean separation of `model` on the held-out scenes.
EvalRecord evaluate_model(const ToyModel& model, const std::vector<SyntheticScene>& scenes,
                          const SeparationParams& separation);

std::vector<SyntheticScene> make_eval_scenes(const SceneParams& scene, const Schedule& schedule);

struct BatchLoss {
  double l_re = 0.0;
  double l_depth = 0.0;
  double l_final = 0.0;
  std::size_t contributing_count = 0;
  std::size_t ignored_count = 0;
  std::vector<double> grad;  // d l_final / d parameters
};

/// L_final for one batch: the mean over anchors of reg_loss plus
/// weight * mean over items of si_loss, with its parameter gradient.
/// `sampling` is taken by value so repeated calls see identical samples.
BatchLoss batch_loss(const ToyModel& model, const std::vector<const SyntheticScene*>& batch,
                     const TrainConfig& config, SeedRng sampling);

/// Plain gradient descent on reg + w * depth over a fixed seeded scene pool.
/// Pure function of (config, seed).
TrainRecord train_run(const TrainConfig& config, std::uint64_t seed);

/// Serializations used by the CLI; formatting is fixed so reruns are
/// byte-identical.
std::string train_steps_csv(const TrainRecord& record);
std::string train_evals_csv(const TrainRecord& record);

}  // namespace metricdepth
