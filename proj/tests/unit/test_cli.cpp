#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "metricdepth/config.hpp"
#include "metricdepth/experiment.hpp"
#include "metricdepth/grid_io.hpp"
#include "metricdepth/verify.hpp"

using namespace metricdepth;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"({
  "scene": {"height": 12, "width": 12, "d_min": 0.5, "d_max": 10.0},
  "model": {"hidden": 6, "feature_channels": 4},
  "schedule": {"steps": 6, "batch_size": 2, "learning_rate": 0.01, "seeds": [1, 2],
               "train_scenes": 3, "eval_scenes": 2, "eval_every": 3},
  "separation": {"pairs": 128},
  "strategies": [
    {"name": "baseline", "type": "none"},
    {"name": "uniform", "type": "uniform", "r_p": 0.1, "r_n": 0.5, "margin": 4,
     "n_within": 2, "n_across": 1},
    {"name": "multi_range", "type": "multi_range", "r_p": 0.1,
     "ranges": [{"low": 0.5, "high": 1.0, "margin": 3}, {"low": 1.0, "high": 1.5, "margin": 6}],
     "n_within": 2, "n_across": 1, "loss_reduction": "sum"}
  ],
  "sweep": {"strategy": "multi_range", "n_within": [1, 3], "n_across": []}
}
)";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_message(const std::string& text) {
  try {
    parse_experiment_config(text, "cfg.json");
  } catch (const Error& e) {
    return e.detail();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + METRICDEPTH_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parses with defaults filled in") {
  const ExperimentConfig c = parse_experiment_config(kTinyConfig);
  CHECK(c.scene.height == 12);
  CHECK(c.scene.input_channels == 3);
  CHECK(c.model.input_channels == 3);
  CHECK(c.schedule.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(c.schedule.decay == LrDecay::Cosine);
  REQUIRE(c.strategies.size() == 3);
  CHECK_FALSE(c.strategies[0].reg.enabled());
  CHECK(std::get<UniformStrategy>(c.strategies[1].reg.strategy).margin == 4.0);
  CHECK(c.strategies[2].reg.loss_reduction == LossReduction::Sum);
  CHECK(c.strategies[1].reg.loss_reduction == LossReduction::MeanOverContributing);
  REQUIRE(c.sweep.has_value());
  CHECK(c.sweep->n_within == std::vector<std::size_t>{1, 3});
  CHECK(c.output_dir == "out");
}

TEST_CASE("config round trip") {
  const ExperimentConfig c = parse_experiment_config(kTinyConfig);
  const std::string text = to_json_text(c);
  const ExperimentConfig again = parse_experiment_config(text);
  CHECK(again == c);
  CHECK(to_json_text(again) == text);
}

TEST_CASE("config diagnostics carry line numbers") {
  CHECK(error_message("{\n  \"scene\": {\n    \"height\": 4\n  },\n  \"strategies\": []\n}\n")
            .rfind("cfg.json:2:", 0) == 0);
  const std::string unknown = error_message("{\n \"strategies\": [{\"name\": \"a\", \"type\": \"none\"}],\n \"bogus\": 1\n}");
  CHECK(unknown.rfind("cfg.json:3:", 0) == 0);
  CHECK(unknown.find("bogus") != std::string::npos);
  const std::string bad_margin = error_message(
      "{\"strategies\": [\n  {\"name\": \"u\", \"type\": \"uniform\",\n   \"margin\": -1}\n]}");
  CHECK(bad_margin.rfind("cfg.json:2:", 0) == 0);
  const std::string bad_type = error_message("{\"schedule\": {\n\"steps\": \"many\"}, \"strategies\": []}");
  CHECK(bad_type.rfind("cfg.json:2:", 0) == 0);

  try {
    parse_experiment_config("{\n  \"scene\": {,}\n}", "cfg.json");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(e.detail().rfind("cfg.json:2:", 0) == 0);
  }
  CHECK_THROWS_CODE(parse_experiment_config("{}"), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(parse_experiment_config(
                        R"({"strategies": [{"name": "a", "type": "none"}, {"name": "a", "type": "none"}]})"),
                    ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(parse_experiment_config(
                        R"({"strategies": [{"name": "a", "type": "none"}], "sweep": {"strategy": "b"}})"),
                    ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(load_experiment_config("/nonexistent/config.json"), ErrorCode::IoError);
}

TEST_CASE("ablation writes the expected tree, byte-identically on rerun") {
  const ExperimentConfig c = parse_experiment_config(kTinyConfig);
  const fs::path a = testutil::scratch_dir("ablate_a");
  const fs::path b = testutil::scratch_dir("ablate_b");
  const AblationSummary sa = run_ablation(c, a, nullptr);
  run_ablation(c, b, nullptr);

  CHECK(sa.strategies.size() == 3);
  CHECK(sa.strategy("uniform").runs.size() == 2);
  CHECK(sa.sweep.size() == 2);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    CHECK_MESSAGE(read_file(entry.path()) == read_file(b / rel), rel.string());
    ++files;
  }
  for (const char* s : {"baseline", "uniform", "multi_range"}) {
    for (const char* seed : {"seed_1", "seed_2"}) {
      for (const char* f : {"steps.csv", "evals.csv", "metrics.csv", "model.json", "run.json"}) {
        CHECK(fs::exists(a / s / seed / f));
      }
    }
  }
  CHECK(fs::exists(a / "summary.json"));
  CHECK(fs::exists(a / "config.json"));
  const std::string plot = read_file(a / "sweep_n_within.txt");
  CHECK(std::count(plot.begin(), plot.end(), '\n') == 2);
  CHECK(plot.rfind("1 ", 0) == 0);
  CHECK_FALSE(fs::exists(a / "sweep_n_across.txt"));
  CHECK(files >= 3 * 2 * 5 + 2 * 2 * 5 + 3);

  const std::string metrics = read_file(a / "uniform" / "seed_1" / "metrics.csv");
  CHECK(metrics.rfind("abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,n\n", 0) == 0);
  CHECK(parse_experiment_config(read_file(a / "config.json")) == c);
}

TEST_CASE("model files reload and evaluate identically") {
  const ExperimentConfig c = parse_experiment_config(kTinyConfig);
  const fs::path dir = testutil::scratch_dir("eval_model");
  const auto runs = run_train(c, "uniform", 2, dir, nullptr);
  REQUIRE(runs.size() == 1);
  const EvalRecord e = run_eval_model(c, dir / "uniform" / "seed_2" / "model.json", dir);
  CHECK(e.metrics == runs[0].metrics);
  CHECK(read_file(dir / "metrics.csv") == read_file(dir / "uniform" / "seed_2" / "metrics.csv"));
}

TEST_CASE("gen-scenes and map evaluation") {
  const fs::path dir = testutil::scratch_dir("gen");
  SceneParams sp;
  sp.height = sp.width = 16;
  run_gen_scenes(sp, RegConfig{}, 5, 2, dir);
  for (const char* f : {"scene_0_image.pfm", "scene_0_depth.pfm", "scene_0_depth.pfm.mask",
                        "scene_0_ident.pgm", "scene_1_image.pfm"}) {
    CHECK(fs::exists(dir / f));
  }
  const MetricReport m = run_eval_maps(dir / "scene_0_depth.pfm", dir / "scene_0_depth.pfm", dir);
  CHECK(m.abs_rel == 0.0);
  CHECK(m.delta1 == 1.0);
  CHECK(m.pixel_count == 256);
}

TEST_CASE("verification suites pass and their canaries fail") {
  GradcheckOptions g;
  g.trials = 10;
  g.model_trials = 1;
  CHECK(run_gradcheck(g).passed());
  g.fault = testing::Fault::FlipHingeGradient;
  CHECK_FALSE(run_gradcheck(g).passed());
  g.fault = testing::Fault::None;
  g.tolerance = 0.0;
  g.model_tolerance = 0.0;
  CHECK_FALSE(run_gradcheck(g).passed());

  OracleOptions o;
  o.trials = 20;
  CHECK(run_oracle(o).passed());
  o.fault = testing::Fault::GapAsNegative;
  CHECK_FALSE(run_oracle(o).passed());
  o.trials = 0;
  CHECK(run_oracle(o).passed());
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-9, 0.0, 1e-3) == doctest::Approx(1e-6));
}

TEST_CASE("command-line exit statuses") {
  const fs::path dir = testutil::scratch_dir("cli_exit");
  CHECK(run_cli("gradcheck --trials 5") == 0);
  CHECK(run_cli("gradcheck --trials 5 --inject-fault flip-hinge") != 0);
  CHECK(run_cli("gradcheck --trials 5 --tolerance 0") != 0);
  CHECK(run_cli("oracle --trials 10") == 0);
  CHECK(run_cli("oracle --trials 10 --inject-fault gap-negative") != 0);
  CHECK(run_cli("oracle --trials 0") == 0);

  const fs::path out = dir / "ablate_out";
  CHECK(run_cli("ablate --config " + (dir / "missing.json").string() + " --out " + out.string()) != 0);
  CHECK_FALSE(fs::exists(out));
  CHECK(run_cli("train --config " + (dir / "missing.json").string() + " --out " + out.string()) != 0);
  CHECK_FALSE(fs::exists(out));
  CHECK(run_cli("frobnicate") != 0);

  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\n  \"strategies\": [\n    {\"name\": \"x\", \"type\": \"sideways\"}\n  ]\n}\n";
  }
  CHECK(run_cli("ablate --config " + (dir / "bad.json").string() + " --out " + out.string()) != 0);
  CHECK_FALSE(fs::exists(out));

  {
    std::ofstream good(dir / "good.json");
    good << kTinyConfig;
  }
  CHECK(run_cli("train --config " + (dir / "good.json").string() + " --strategy multi_range --seed 1 --out " +
                out.string()) == 0);
  CHECK(fs::exists(out / "multi_range" / "seed_1" / "steps.csv"));
  CHECK(run_cli("gen-scenes --config " + (dir / "good.json").string() + " --count 1 --out " +
                (dir / "scenes").string()) == 0);
  CHECK(fs::exists(dir / "scenes" / "scene_0_ident.pgm"));
  CHECK(run_cli("eval --pred " + (dir / "scenes" / "scene_0_depth.pfm").string() + " --gt " +
                (dir / "scenes" / "scene_0_depth.pfm").string() + " --out " + (dir / "ev").string()) == 0);
  CHECK(fs::exists(dir / "ev" / "metrics.csv"));
}

}  // TEST_SUITE
