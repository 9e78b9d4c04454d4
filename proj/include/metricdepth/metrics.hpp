#pragma once

#include <cstddef>
#include <string>

#include "metricdepth/grid.hpp"

namespace metricdepth {

struct MetricReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double log10 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t pixel_count = 0;

  static std::string csv_header();  // abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,n
  std::string csv_row() const;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Threshold accuracy base; delta_j counts max(p/g, g/p) < 1.25^j (strict).
inline constexpr double kDeltaThreshold = 1.25;

/// Standard depth metrics over pixels valid in both maps with gt > 0 and
/// pred > 0. Throws EmptyEvaluation when no pixel qualifies.
MetricReport compute_metrics(const Grid1& pred, const Grid1& gt);

/// Running sums so several prediction/ground-truth pairs can be pooled into
/// one report (pixel-weighted), as done for a held-out scene set.
class MetricAccumulator {
 public:
  void add(const Grid1& pred, const Grid1& gt);
  MetricReport report() const;
  std::size_t pixel_count() const noexcept { return n_; }

 private:
  double abs_rel_ = 0.0;
  double sq_rel_ = 0.0;
  double sq_err_ = 0.0;
  double sq_log_ = 0.0;
  double log10_ = 0.0;
  std::size_t hits_[3] = {0, 0, 0};
  std::size_t n_ = 0;
};

/// Shortest decimal text that round-trips the double (used by every
/// serialized artifact so reruns are byte-identical).
std::string format_real(double v);

}  // namespace metricdepth
