#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metricdepth/regloss.hpp"

namespace metricdepth {

/// Outcome of one family of checks (e.g. reg_loss gradients, uniform strategy).
struct SuiteCheck {
  std::string name;
  std::size_t trials = 0;
  std::size_t compared = 0;  // coordinates or scalars compared
  std::size_t excluded = 0;  // kink-adjacent coordinates skipped
  double max_error = 0.0;
  double tolerance = 0.0;

  bool passed() const noexcept { return max_error < tolerance; }
};

struct VerifyReport {
  std::vector<SuiteCheck> checks;

  bool passed() const noexcept;
  /// One line per check: name, trials, compared, excluded, max error, verdict.
  std::string text() const;
};

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// gradient is ~0 from turning rounding noise into a large relative error.
double relative_error(double a, double b, double floor = 0.0);

struct GradcheckOptions {
  std::size_t trials = 100;
  double tolerance = 1e-5;          // reg_loss and si_loss suites
  double model_tolerance = 1e-4;    // full-model suite
  std::size_t model_trials = 4;
  std::uint64_t seed = 1;
  double step = 1e-5;               // central difference step
  double kink_guard = 1e-4;         // skip coordinates this close to a hinge
  double magnitude_floor = 1e-3;
  testing::Fault fault = testing::Fault::None;
};

/// Analytic vs central finite-difference gradients:
///   reg_loss (uniform and multi-range, both reductions) on random instances
///   with H, W <= 4, C <= 5 and at most 3 samples; si_loss; and the full
///   toy model through batch_loss on 8x8 scenes.
VerifyReport run_gradcheck(const GradcheckOptions& options);

struct OracleOptions {
  std::size_t trials = 100;
  double tolerance = 1e-12;
  std::uint64_t seed = 1;
  testing::Fault fault = testing::Fault::None;
};

/// reg_loss (Sum reduction) against a direct quadruple loop over samples,
/// rows, columns and channels that re-derives shifts, labels and distances
/// from the raw batch; compute_metrics against per-metric scalar loops.
VerifyReport run_oracle(const OracleOptions& options);

}  // namespace metricdepth
