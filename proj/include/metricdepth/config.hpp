#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metricdepth/identify.hpp"
#include "metricdepth/regloss.hpp"
#include "metricdepth/scene.hpp"
#include "metricdepth/trainer.hpp"

namespace metricdepth {

struct NamedStrategy {
  std::string name;
  RegConfig reg;
  friend bool operator==(const NamedStrategy&, const NamedStrategy&) = default;
};

/// Sample-count sweep: one strategy re-run with each n_within value (at its
/// own n_across) and each n_across value (at its own n_within).
struct SweepConfig {
  std::string strategy;
  std::vector<std::size_t> n_within;
  std::vector<std::size_t> n_across;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  SceneParams scene;
  ModelShape model;
  DepthLossParams depth_loss;
  Schedule schedule;
  SeparationParams separation;
  std::vector<NamedStrategy> strategies;
  std::optional<SweepConfig> sweep;
  std::string output_dir = "out";

  void validate() const;
  const NamedStrategy& strategy(const std::string& name) const;
  TrainConfig train_config(const RegConfig& reg) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses JSON text. Syntax errors raise ParseError and schema or range
/// violations raise InvalidConfig; both messages start with
/// "<source>:<line>:" pointing at the offending token or key.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Canonical JSON (fixed key order, two-space indent, trailing newline).
std::string to_json_text(const ExperimentConfig& config);

}  // namespace metricdepth
