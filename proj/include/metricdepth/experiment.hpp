#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metricdepth/config.hpp"
#include "metricdepth/metrics.hpp"
#include "metricdepth/model.hpp"
#include "metricdepth/trainer.hpp"

namespace metricdepth {

/// Final held-out numbers of one (strategy, seed) training run.
struct RunSummary {
  std::string strategy;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string diagnostic;
  MetricReport metrics;
  double separation = 0.0;
  double mean_ignored_fraction = 0.0;
};

struct StrategySummary {
  std::string name;
  std::vector<RunSummary> runs;  // in seed-list order
  double mean_abs_rel = 0.0;     // over non-diverged runs; NaN if none
  double mean_separation = 0.0;
};

/// One point of the sample-count sweep: mean AbsRel over the seed list.
struct SweepPoint {
  std::string axis;  // "n_within" or "n_across"
  std::size_t value = 0;
  double mean_abs_rel = 0.0;
  std::vector<RunSummary> runs;
};

struct AblationSummary {
  std::vector<StrategySummary> strategies;
  std::vector<SweepPoint> sweep;

  const StrategySummary& strategy(const std::string& name) const;
  /// Canonical JSON text written to summary.json.
  std::string json_text() const;
};

/// Writes steps.csv, evals.csv, metrics.csv, model.json and run.json into
/// `dir` (created if needed) and returns the run summary.
RunSummary write_run(const std::filesystem::path& dir, const std::string& strategy,
                     const TrainConfig& config, const TrainRecord& record);

/// Trains `strategy` for every seed (or only `seed`) into
/// out/<strategy>/seed_<s>/.
std::vector<RunSummary> run_train(const ExperimentConfig& config, const std::string& strategy,
                                  std::optional<std::uint64_t> seed,
                                  const std::filesystem::path& out, std::ostream* log);

/// Every strategy across every seed, then the optional sweep. Writes
/// config.json, summary.json, run directories and sweep_<axis>.txt plot
/// data (two columns: sample count, mean AbsRel).
AblationSummary run_ablation(const ExperimentConfig& config, const std::filesystem::path& out,
                             std::ostream* log);

/// Model file written by write_run: shape and flat parameter vector.
std::string model_json_text(const ToyModel& model);
ToyModel load_model_json(const std::filesystem::path& path);

/// Scores a model on the config's held-out scenes; writes metrics.csv and
/// eval.json into `out`.
EvalRecord run_eval_model(const ExperimentConfig& config, const std::filesystem::path& model_path,
                          const std::filesystem::path& out);

/// Scores a prediction PFM against a ground-truth PFM (each with an
/// optional .mask sidecar); writes metrics.csv into `out`.
MetricReport run_eval_maps(const std::filesystem::path& pred, const std::filesystem::path& gt,
                           const std::filesystem::path& out);

/// Writes `count` scenes starting at `seed`: scene_<k>_image.pfm,
/// scene_<k>_depth.pfm (+ .mask) and scene_<k>_ident.pgm, the label map of
/// the scene against one within-map shift of itself under `reg`.
void run_gen_scenes(const SceneParams& scene, const RegConfig& reg, std::uint64_t seed,
                    std::size_t count, const std::filesystem::path& out);

/// Writes `text` to `path` exactly (binary mode); throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace metricdepth
