#include "metricdepth/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "metricdepth/error.hpp"

namespace metricdepth {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string MetricReport::csv_header() { return "abs_rel,sq_rel,rmse,rmse_log,log10,d1,d2,d3,n"; }

std::string MetricReport::csv_row() const {
  std::string row;
  for (double v : {abs_rel, sq_rel, rmse, rmse_log, log10, delta1, delta2, delta3}) {
    row += format_real(v);
    row += ',';
  }
  row += std::to_string(pixel_count);
  return row;
}

void MetricAccumulator::add(const Grid1& pred, const Grid1& gt) {
  if (!pred.same_shape(gt)) throw Error(ErrorCode::ShapeError, "compute_metrics: pred/gt extents differ");
  static const std::array<double, 3> thresholds = {
      kDeltaThreshold, kDeltaThreshold * kDeltaThreshold,
      kDeltaThreshold * kDeltaThreshold * kDeltaThreshold};
  for (std::size_t p = 0; p < gt.pixels(); ++p) {
    if (!gt.valid(p) || !pred.valid(p)) continue;
    const double g = gt.value(p);
    const double d = pred.value(p);
    if (!(g > 0.0) || !(d > 0.0)) continue;
    const double err = std::abs(d - g);
    abs_rel_ += err / g;
    sq_rel_ += err * err / g;
    sq_err_ += err * err;
    const double dlog = std::log(d) - std::log(g);
    sq_log_ += dlog * dlog;
    log10_ += std::abs(std::log10(d) - std::log10(g));
    const double ratio = std::max(d / g, g / d);
    for (std::size_t j = 0; j < 3; ++j) hits_[j] += ratio < thresholds[j];
    ++n_;
  }
}

MetricReport MetricAccumulator::report() const {
  if (n_ == 0) throw Error(ErrorCode::EmptyEvaluation, "no pixel is valid for evaluation");
  const double n = static_cast<double>(n_);
  MetricReport r;
  r.abs_rel = abs_rel_ / n;
  r.sq_rel = sq_rel_ / n;
  r.rmse = std::sqrt(sq_err_ / n);
  r.rmse_log = std::sqrt(sq_log_ / n);
  r.log10 = log10_ / n;
  r.delta1 = static_cast<double>(hits_[0]) / n;
  r.delta2 = static_cast<double>(hits_[1]) / n;
  r.delta3 = static_cast<double>(hits_[2]) / n;
  r.pixel_count = n_;
  return r;
}

MetricReport compute_metrics(const Grid1& pred, const Grid1& gt) {
  MetricAccumulator acc;
  acc.add(pred, gt);
  return acc.report();
}

}  // namespace metricdepth
