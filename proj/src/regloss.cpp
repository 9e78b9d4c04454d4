#include "metricdepth/regloss.hpp"

#include <cmath>
#include <string>

#include "metricdepth/error.hpp"
#include "reg_kernel.hpp"

namespace metricdepth {

double LossResult::ignored_fraction() const noexcept {
  const std::size_t all = contributing_count + ignored_count;
  return all == 0 ? 0.0 : static_cast<double>(ignored_count) / static_cast<double>(all);
}

void DepthLossParams::validate() const {
  if (!(variance_focus >= 0.0 && variance_focus <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "variance_focus must lie in [0, 1]");
  }
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) {
    throw Error(ErrorCode::InvalidConfig, "output_scale must be > 0");
  }
}

double feat_distance(std::span<const double> f1, std::span<const double> f2) {
  if (f1.size() != f2.size()) {
    throw Error(ErrorCode::ShapeError, "feat_distance: lengths " + std::to_string(f1.size()) +
                                           " and " + std::to_string(f2.size()) + " differ");
  }
  double sq = 0.0;
  for (std::size_t c = 0; c < f1.size(); ++c) {
    const double d = f1[c] - f2[c];
    sq += d * d;
  }
  return std::sqrt(sq);
}

double pair_loss(double dist, SampleLabel label, const RegConfig& config) {
  if (label.is_ignored()) {
    throw Error(ErrorCode::ContractViolation, "pair_loss called on an Ignored pixel");
  }
  if (!(dist >= 0.0)) throw Error(ErrorCode::ContractViolation, "pair_loss: negative distance");
  if (label.is_positive()) return dist;
  const double m = config.margin(label.subgroup());
  return dist < m ? m - dist : 0.0;
}

namespace detail {

KernelResult reg_loss_views(const Grid3& f_a, const Grid1& d_a, std::span<const SampleView> views,
                            const RegConfig& config, double extra_scale, Grid3& grad_anchor,
                            testing::Fault fault) {
  config.validate();
  if (!d_a.same_extent(f_a) || !grad_anchor.same_shape(f_a)) {
    throw Error(ErrorCode::ShapeError, "reg_loss: anchor feature/depth extents differ");
  }
  for (std::size_t n = 0; n < views.size(); ++n) {
    const auto& v = views[n];
    if (!v.feature->same_shape(f_a) || !v.depth->same_shape(d_a) || !v.grad->same_shape(f_a)) {
      throw Error(ErrorCode::ShapeError,
                  "reg_loss: sample " + std::to_string(n) + " does not match the anchor shape");
    }
  }

  const std::size_t groups = static_cast<std::size_t>(config.subgroup_count());
  const std::size_t height = f_a.height();
  const std::size_t width = f_a.width();
  const std::size_t channels = f_a.channels();

  RegStrategy strategy = config.strategy;
  if (fault == testing::Fault::GapAsNegative) {
    if (auto* u = std::get_if<UniformStrategy>(&strategy)) u->r_n = config.r_p;
  }
  std::vector<double> margins(groups + 1, 0.0);
  for (std::size_t j = 1; j <= groups; ++j) margins[j] = config.margin(static_cast<int>(j));

  // Visits every (view, anchor pixel p, source pixel q) with both depths valid.
  auto for_each_term = [&](auto&& fn) {
    for (std::size_t n = 0; n < views.size(); ++n) {
      const auto& v = views[n];
      const auto sh = static_cast<std::size_t>(v.shift_h);
      const auto sw = static_cast<std::size_t>(v.shift_w);
      for (std::size_t i = 0; i < height; ++i) {
        const std::size_t src_i = (i + height - sh) % height;
        for (std::size_t j = 0; j < width; ++j) {
          const std::size_t p = i * width + j;
          const std::size_t q = src_i * width + (j + width - sw) % width;
          fn(v, p, q, d_a.valid(p) && v.depth->valid(q));
        }
      }
    }
  };

  KernelResult out;
  out.breakdown.negative_loss.assign(groups, 0.0);
  out.breakdown.negative_count.assign(groups, 0);
  out.breakdown.active_count.assign(groups, 0);

  // Pass 1 counts classified terms; the mean reduction needs the count
  // before any gradient can be scaled.
  for_each_term([&](const SampleView& v, std::size_t p, std::size_t q, bool valid) {
    if (valid &&
        !classify_differential(std::abs(d_a.value(p) - v.depth->value(q)), config.r_p, strategy)
             .is_ignored()) {
      ++out.contributing_count;
    } else {
      ++out.ignored_count;
    }
  });

  double scale = 1.0;
  if (config.loss_reduction == LossReduction::MeanOverContributing) {
    scale = out.contributing_count == 0 ? 0.0 : 1.0 / static_cast<double>(out.contributing_count);
  }

  // Pass 2: terms and gradients. d dist / d f_a = (f_a - f_s) / dist, zero at dist = 0.
  double raw_positive = 0.0;
  std::vector<double> raw_negative(groups, 0.0);
  auto grad_a = grad_anchor.data();
  for_each_term([&](const SampleView& v, std::size_t p, std::size_t q, bool valid) {
    if (!valid) return;
    const SampleLabel label =
        classify_differential(std::abs(d_a.value(p) - v.depth->value(q)), config.r_p, strategy);
    if (label.is_ignored()) return;
    const auto fa = f_a.pixel(p);
    const auto fs = v.feature->pixel(q);
    const double dist = feat_distance(fa, fs);
    double coeff = 0.0;
    if (label.is_positive()) {
      raw_positive += dist;
      ++out.breakdown.positive_count;
      if (dist > 0.0) coeff = scale / dist;
    } else {
      const auto j = static_cast<std::size_t>(label.subgroup());
      ++out.breakdown.negative_count[j - 1];
      if (dist < margins[j]) {
        raw_negative[j - 1] += margins[j] - dist;
        ++out.breakdown.active_count[j - 1];
        if (dist > 0.0) coeff = -scale / dist;
        if (fault == testing::Fault::FlipHingeGradient) coeff = -coeff;
      }
    }
    if (coeff == 0.0) return;
    coeff *= extra_scale;
    auto gs = v.grad->pixel(q);
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = coeff * (fa[c] - fs[c]);
      grad_a[p * channels + c] += g;
      gs[c] -= g;
    }
  });

  out.breakdown.positive_loss = raw_positive * scale;
  out.total = out.breakdown.positive_loss;
  for (std::size_t j = 0; j < groups; ++j) {
    out.breakdown.negative_loss[j] = raw_negative[j] * scale;
    out.total += out.breakdown.negative_loss[j];
  }
  return out;
}

}  // namespace detail

namespace testing {

LossResult reg_loss_with_fault(const Grid3& f_a, const Grid1& d_a, const SampleSet& samples,
                               const RegConfig& config, Fault fault) {
  LossResult out{.total = 0.0,
                 .breakdown = {},
                 .contributing_count = 0,
                 .ignored_count = 0,
                 .grad_anchor = Grid3(f_a.height(), f_a.width(), f_a.channels()),
                 .grad_samples = {}};
  out.grad_samples.reserve(samples.size());
  for (const auto& s : samples.pairs) {
    out.grad_samples.emplace_back(s.feature.height(), s.feature.width(), s.feature.channels());
  }
  std::vector<detail::SampleView> views;
  views.reserve(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    views.push_back({&samples.pairs[n].feature, &samples.pairs[n].depth, 0, 0, &out.grad_samples[n]});
  }
  auto k = detail::reg_loss_views(f_a, d_a, views, config, 1.0, out.grad_anchor, fault);
  out.total = k.total;
  out.breakdown = std::move(k.breakdown);
  out.contributing_count = k.contributing_count;
  out.ignored_count = k.ignored_count;
  return out;
}

}  // namespace testing

LossResult reg_loss(const Grid3& f_a, const Grid1& d_a, const SampleSet& samples,
                    const RegConfig& config) {
  return testing::reg_loss_with_fault(f_a, d_a, samples, config, testing::Fault::None);
}

DepthLossResult si_loss(const Grid1& pred, const Grid1& gt, const DepthLossParams& params) {
  params.validate();
  if (!pred.same_shape(gt)) throw Error(ErrorCode::ShapeError, "si_loss: pred/gt extents differ");
  const std::size_t pixels = gt.pixels();
  DepthLossResult out;
  out.grad.assign(pixels, 0.0);

  std::vector<double> g(pixels, 0.0);
  std::vector<std::uint8_t> use(pixels, 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!gt.valid(p) || !pred.valid(p) || !(gt.value(p) > 0.0)) continue;
    if (!(pred.value(p) > 0.0)) {
      throw Error(ErrorCode::DomainError,
                  "si_loss: non-positive prediction at valid pixel " + std::to_string(p));
    }
    g[p] = std::log(pred.value(p)) - std::log(gt.value(p));
    use[p] = 1;
    sum += g[p];
    sum_sq += g[p] * g[p];
    ++out.valid_count;
  }
  if (out.valid_count == 0) return out;

  const double t = static_cast<double>(out.valid_count);
  const double mean = sum / t;
  const double variance = sum_sq / t - params.variance_focus * mean * mean;
  if (!(variance > 0.0)) return out;  // zero loss; sqrt has no derivative at 0
  const double root = std::sqrt(variance);
  out.value = params.output_scale * root;

  // d/dg_i = alpha / (2 root) * (2 g_i / T - 2 lambda mean / T), and dg_i/dpred_i = 1 / pred_i.
  const double k = params.output_scale / (root * t);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!use[p]) continue;
    out.grad[p] = k * (g[p] - params.variance_focus * mean) / pred.value(p);
  }
  return out;
}

double final_loss(const LossResult& reg, double depth, double weight) {
  if (!(weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "depth loss weight must be >= 0");
  return reg.total + weight * depth;
}

}  // namespace metricdepth
