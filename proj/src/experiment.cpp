#include "metricdepth/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "metricdepth/error.hpp"
#include "metricdepth/grid_io.hpp"
#include "metricdepth/identify.hpp"
#include "metricdepth/rng.hpp"
#include "metricdepth/scene.hpp"

namespace metricdepth {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// JSON has no inf/nan; those become null.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json metrics_json(const MetricReport& m) {
  return {{"abs_rel", num(m.abs_rel)}, {"sq_rel", num(m.sq_rel)},   {"rmse", num(m.rmse)},
          {"rmse_log", num(m.rmse_log)}, {"log10", num(m.log10)}, {"d1", num(m.delta1)},
          {"d2", num(m.delta2)},       {"d3", num(m.delta3)},     {"n", m.pixel_count}};
}

ordered_json run_json(const RunSummary& r) {
  ordered_json j;
  j["strategy"] = r.strategy;
  j["seed"] = r.seed;
  j["diverged"] = r.diverged;
  if (r.diverged) j["diagnostic"] = r.diagnostic;
  j["metrics"] = metrics_json(r.metrics);
  j["separation"] = num(r.separation);
  j["mean_ignored_fraction"] = num(r.mean_ignored_fraction);
  return j;
}

double mean_abs_rel(const std::vector<RunSummary>& runs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.diverged) continue;
    sum += r.metrics.abs_rel;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

double mean_separation(const std::vector<RunSummary>& runs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.diverged) continue;
    sum += r.separation;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

std::string run_line(const RunSummary& r) {
  if (r.diverged) return r.strategy + " seed " + std::to_string(r.seed) + ": diverged (" + r.diagnostic + ")";
  return r.strategy + " seed " + std::to_string(r.seed) + ": abs_rel " + format_real(r.metrics.abs_rel) +
         " separation " + format_real(r.separation);
}

std::vector<RunSummary> train_seeds(const TrainConfig& tc, const std::string& label,
                                    const std::vector<std::uint64_t>& seeds, const fs::path& dir,
                                    std::ostream* log) {
  std::vector<RunSummary> runs;
  for (std::uint64_t seed : seeds) {
    const TrainRecord rec = train_run(tc, seed);
    runs.push_back(write_run(dir / ("seed_" + std::to_string(seed)), label, tc, rec));
    say(log, run_line(runs.back()));
  }
  return runs;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

const StrategySummary& AblationSummary::strategy(const std::string& name) const {
  for (const auto& s : strategies) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::InvalidConfig, "no strategy named \"" + name + "\" in the summary");
}

std::string AblationSummary::json_text() const {
  ordered_json j;
  j["strategies"] = ordered_json::array();
  for (const auto& s : strategies) {
    ordered_json e;
    e["name"] = s.name;
    e["mean_abs_rel"] = num(s.mean_abs_rel);
    e["mean_separation"] = num(s.mean_separation);
    e["runs"] = ordered_json::array();
    for (const auto& r : s.runs) e["runs"].push_back(run_json(r));
    j["strategies"].push_back(std::move(e));
  }
  if (!sweep.empty()) {
    j["sweep"] = ordered_json::array();
    for (const auto& p : sweep) {
      ordered_json e;
      e["axis"] = p.axis;
      e["value"] = p.value;
      e["mean_abs_rel"] = num(p.mean_abs_rel);
      e["runs"] = ordered_json::array();
      for (const auto& r : p.runs) e["runs"].push_back(run_json(r));
      j["sweep"].push_back(std::move(e));
    }
  }
  return j.dump(2) + "\n";
}

std::string model_json_text(const ToyModel& model) {
  ordered_json j;
  j["input_channels"] = model.shape().input_channels;
  j["hidden"] = model.shape().hidden;
  j["feature_channels"] = model.shape().feature_channels;
  j["parameters"] = ordered_json::array();
  for (double v : model.parameters()) j["parameters"].push_back(v);
  return j.dump(2) + "\n";
}

ToyModel load_model_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model file " + path.string());
  try {
    const json j = json::parse(in);
    ModelShape shape;
    shape.input_channels = j.at("input_channels").get<std::size_t>();
    shape.hidden = j.at("hidden").get<std::size_t>();
    shape.feature_channels = j.at("feature_channels").get<std::size_t>();
    return ToyModel(shape, j.at("parameters").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

RunSummary write_run(const fs::path& dir, const std::string& strategy, const TrainConfig& config,
                     const TrainRecord& record) {
  RunSummary s;
  s.strategy = strategy;
  s.seed = record.seed;
  s.diverged = record.diverged;
  s.diagnostic = record.diagnostic;
  if (!record.evals.empty()) {
    s.metrics = record.final_eval().metrics;
    s.separation = record.final_eval().separation;
  }
  double ign = 0.0;
  for (const auto& st : record.steps) ign += st.ignored_fraction;
  s.mean_ignored_fraction = record.steps.empty() ? 0.0 : ign / static_cast<double>(record.steps.size());

  fs::create_directories(dir);
  write_text_file(dir / "steps.csv", train_steps_csv(record));
  write_text_file(dir / "evals.csv", train_evals_csv(record));
  if (!record.diverged) {
    write_text_file(dir / "metrics.csv", MetricReport::csv_header() + "\n" + s.metrics.csv_row() + "\n");
  }
  write_text_file(dir / "model.json", model_json_text(ToyModel(config.model, record.final_parameters)));
  write_text_file(dir / "run.json", run_json(s).dump(2) + "\n");
  return s;
}

std::vector<RunSummary> run_train(const ExperimentConfig& config, const std::string& strategy,
                                  std::optional<std::uint64_t> seed, const fs::path& out,
                                  std::ostream* log) {
  const NamedStrategy& named = config.strategy(strategy);
  const TrainConfig tc = config.train_config(named.reg);
  tc.validate();
  const std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : config.schedule.seeds;
  return train_seeds(tc, named.name, seeds, out / named.name, log);
}

AblationSummary run_ablation(const ExperimentConfig& config, const fs::path& out, std::ostream* log) {
  config.validate();
  fs::create_directories(out);
  write_text_file(out / "config.json", to_json_text(config));

  AblationSummary summary;
  for (const auto& named : config.strategies) {
    StrategySummary s;
    s.name = named.name;
    s.runs = train_seeds(config.train_config(named.reg), named.name, config.schedule.seeds,
                         out / named.name, log);
    s.mean_abs_rel = mean_abs_rel(s.runs);
    s.mean_separation = mean_separation(s.runs);
    say(log, named.name + ": mean abs_rel " + format_real(s.mean_abs_rel));
    summary.strategies.push_back(std::move(s));
  }

  if (config.sweep) {
    const RegConfig base = config.strategy(config.sweep->strategy).reg;
    auto sweep_axis = [&](const std::string& axis, const std::vector<std::size_t>& values) {
      if (values.empty()) return;
      std::string plot;
      for (std::size_t v : values) {
        RegConfig reg = base;
        (axis == "n_within" ? reg.n_within : reg.n_across) = v;
        const std::string label = axis + "_" + std::to_string(v);
        SweepPoint p{axis, v, 0.0,
                     train_seeds(config.train_config(reg), config.sweep->strategy + "/" + label,
                                 config.schedule.seeds, out / "sweep" / label, log)};
        p.mean_abs_rel = mean_abs_rel(p.runs);
        plot += std::to_string(v) + ' ' + format_real(p.mean_abs_rel) + '\n';
        summary.sweep.push_back(std::move(p));
      }
      write_text_file(out / ("sweep_" + axis + ".txt"), plot);
    };
    sweep_axis("n_within", config.sweep->n_within);
    sweep_axis("n_across", config.sweep->n_across);
  }

  write_text_file(out / "summary.json", summary.json_text());
  return summary;
}

EvalRecord run_eval_model(const ExperimentConfig& config, const fs::path& model_path, const fs::path& out) {
  const ToyModel model = load_model_json(model_path);
  if (model.shape().input_channels != config.scene.input_channels) {
    throw Error(ErrorCode::ShapeError, "model input channels do not match the config's scenes");
  }
  const EvalRecord rec = evaluate_model(model, make_eval_scenes(config.scene, config.schedule), config.separation);
  write_text_file(out / "metrics.csv", MetricReport::csv_header() + "\n" + rec.metrics.csv_row() + "\n");
  ordered_json j;
  j["metrics"] = metrics_json(rec.metrics);
  j["separation"] = num(rec.separation);
  write_text_file(out / "eval.json", j.dump(2) + "\n");
  return rec;
}

MetricReport run_eval_maps(const fs::path& pred, const fs::path& gt, const fs::path& out) {
  const MetricReport m = compute_metrics(read_depth_pfm(pred), read_depth_pfm(gt));
  write_text_file(out / "metrics.csv", MetricReport::csv_header() + "\n" + m.csv_row() + "\n");
  return m;
}

void run_gen_scenes(const SceneParams& scene, const RegConfig& reg, std::uint64_t seed,
                    std::size_t count, const fs::path& out) {
  scene.validate();
  reg.validate();
  fs::create_directories(out);
  for (std::size_t k = 0; k < count; ++k) {
    const SyntheticScene s = gen_scene(mix_seed(seed, k), scene);
    const std::string stem = "scene_" + std::to_string(k);
    write_pfm(out / (stem + "_image.pfm"), s.image);
    write_depth_pfm(out / (stem + "_depth.pfm"), s.depth);
    SeedRng rng(s.seed);
    const auto sh = gen_shift_seed(rng, static_cast<std::int64_t>(scene.height));
    const auto sw = gen_shift_seed(rng, static_cast<std::int64_t>(scene.width));
    const Grid1 d_r = differential_map(s.depth, shift2d(s.depth, sh, sw));
    write_ident_pgm(out / (stem + "_ident.pgm"), identify(d_r, reg));
  }
}

}  // namespace metricdepth
