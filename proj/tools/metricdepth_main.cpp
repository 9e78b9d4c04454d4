#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "metricdepth/config.hpp"
#include "metricdepth/error.hpp"
#include "metricdepth/experiment.hpp"
#include "metricdepth/verify.hpp"

namespace md = metricdepth;
namespace fs = std::filesystem;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

md::testing::Fault parse_fault(const std::string& name) {
  if (name.empty() || name == "none") return md::testing::Fault::None;
  if (name == "flip-hinge") return md::testing::Fault::FlipHingeGradient;
  if (name == "gap-negative") return md::testing::Fault::GapAsNegative;
  throw md::Error(md::ErrorCode::InvalidConfig, "unknown fault \"" + name + "\"");
}

int report(const md::VerifyReport& r) {
  std::cout << r.text();
  double worst = 0.0;
  for (const auto& c : r.checks) worst = std::max(worst, c.max_error);
  std::cout << "max relative error: " << md::format_real(worst) << "\n"
            << (r.passed() ? "PASS" : "FAIL") << "\n";
  return r.passed() ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-differential feature regularization: verification suites and toy benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::size_t trials = 100;
  double grad_tolerance = 1e-5;
  double oracle_tolerance = 1e-12;
  std::string fault;

  auto* gradcheck = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradient suites");
  gradcheck->add_option("--trials", trials, "Random instances per suite")->capture_default_str();
  gradcheck->add_option("--tolerance", grad_tolerance, "Max relative error (model suite uses 10x)")
      ->capture_default_str();
  gradcheck->add_option("--seed", seed, "Root seed")->capture_default_str();
  gradcheck->add_option("--inject-fault", fault, "Test fixture: flip-hinge or gap-negative");

  auto* oracle = app.add_subcommand("oracle", "reg_loss and compute_metrics vs direct loops");
  oracle->add_option("--trials", trials, "Random instances per suite")->capture_default_str();
  oracle->add_option("--tolerance", oracle_tolerance, "Max relative error")->capture_default_str();
  oracle->add_option("--seed", seed, "Root seed")->capture_default_str();
  oracle->add_option("--inject-fault", fault, "Test fixture: flip-hinge or gap-negative");

  auto* ablate = app.add_subcommand("ablate", "Run every strategy over every seed, plus the sweep");
  ablate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  ablate->add_option("--out", out_dir, "Output directory (default: config output_dir)");

  std::string strategy;
  std::optional<std::uint64_t> train_seed;
  auto* train = app.add_subcommand("train", "Train one strategy");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  train->add_option("--seed", train_seed, "Train only this seed (default: the config's seed list)");
  train->add_option("--strategy", strategy, "Strategy name (default: the first one)");

  std::string model_path, pred_path, gt_path;
  auto* eval = app.add_subcommand("eval", "Score a trained model or a prediction PFM");
  eval->add_option("--config", config_path, "Experiment config, for the held-out scenes");
  eval->add_option("--model", model_path, "model.json from a training run");
  eval->add_option("--pred", pred_path, "Predicted depth PFM");
  eval->add_option("--gt", gt_path, "Ground-truth depth PFM");
  std::string eval_out = ".";
  eval->add_option("--out", eval_out, "Output directory")->capture_default_str();

  std::size_t count = 4;
  auto* gen = app.add_subcommand("gen-scenes", "Write synthetic scenes as PFM/PGM");
  gen->add_option("--config", config_path, "Experiment config (scene params, first strategy)");
  gen->add_option("--seed", seed, "Root seed")->capture_default_str();
  gen->add_option("--count", count, "Number of scenes")->capture_default_str();
  std::string gen_out = "scenes";
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gradcheck) {
      md::GradcheckOptions opt;
      opt.trials = trials;
      opt.tolerance = grad_tolerance;
      opt.model_tolerance = 10.0 * grad_tolerance;
      opt.seed = seed;
      opt.fault = parse_fault(fault);
      if (trials == 0) std::cerr << "warning: --trials 0 runs no reg_loss or si_loss instances\n";
      return report(md::run_gradcheck(opt));
    }
    if (*oracle) {
      md::OracleOptions opt;
      opt.trials = trials;
      opt.tolerance = oracle_tolerance;
      opt.seed = seed;
      opt.fault = parse_fault(fault);
      if (trials == 0) std::cerr << "warning: --trials 0 checks nothing; passing vacuously\n";
      return report(md::run_oracle(opt));
    }
    if (*ablate) {
      const auto cfg = md::load_experiment_config(config_path);
      const fs::path out = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
      const auto summary = md::run_ablation(cfg, out, &std::cout);
      for (const auto& s : summary.strategies) {
        std::cout << s.name << " mean abs_rel " << md::format_real(s.mean_abs_rel)
                  << " mean separation " << md::format_real(s.mean_separation) << "\n";
      }
      std::cout << "wrote " << (out / "summary.json").string() << "\n";
      return 0;
    }
    if (*train) {
      const auto cfg = md::load_experiment_config(config_path);
      const fs::path out = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
      const std::string name = strategy.empty() ? cfg.strategies.front().name : strategy;
      const auto runs = md::run_train(cfg, name, train_seed, out, &std::cout);
      for (const auto& r : runs) {
        if (r.diverged) return kExitCheckFailed;
      }
      return 0;
    }
    if (*eval) {
      if (!model_path.empty()) {
        if (config_path.empty()) {
          throw md::Error(md::ErrorCode::InvalidConfig, "eval --model needs --config for the held-out scenes");
        }
        const auto cfg = md::load_experiment_config(config_path);
        const auto rec = md::run_eval_model(cfg, model_path, eval_out);
        std::cout << md::MetricReport::csv_header() << "\n" << rec.metrics.csv_row() << "\n"
                  << "separation " << md::format_real(rec.separation) << "\n";
        return 0;
      }
      if (pred_path.empty() || gt_path.empty()) {
        throw md::Error(md::ErrorCode::InvalidConfig, "eval needs --model or both --pred and --gt");
      }
      const auto m = md::run_eval_maps(pred_path, gt_path, eval_out);
      std::cout << md::MetricReport::csv_header() << "\n" << m.csv_row() << "\n";
      return 0;
    }
    if (*gen) {
      md::SceneParams scene;
      md::RegConfig reg;
      if (!config_path.empty()) {
        const auto cfg = md::load_experiment_config(config_path);
        scene = cfg.scene;
        for (const auto& s : cfg.strategies) {
          if (s.reg.enabled()) {
            reg = s.reg;
            break;
          }
        }
      }
      md::run_gen_scenes(scene, reg, seed, count, gen_out);
      std::cout << "wrote " << count << (count == 1 ? " scene" : " scenes") << " to " << gen_out << "\n";
      return 0;
    }
  } catch (const md::Error& e) {
    std::cerr << "error [" << md::to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
