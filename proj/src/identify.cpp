#include "metricdepth/identify.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "metricdepth/error.hpp"

namespace metricdepth {

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, what);
}

void validate_ranges(double r_p, const MultiRangeStrategy& s) {
  if (s.ranges.empty()) bad_config("multi-range strategy needs at least one range");
  if (s.ranges.size() > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
    bad_config("too many negative ranges");
  }
  double prev_high = r_p;
  for (std::size_t j = 0; j < s.ranges.size(); ++j) {
    const auto& r = s.ranges[j];
    const std::string tag = "range " + std::to_string(j + 1) + ": ";
    if (!std::isfinite(r.low) || !std::isfinite(r.high) || !std::isfinite(r.margin)) {
      bad_config(tag + "bounds and margin must be finite");
    }
    if (!(r.low < r.high)) bad_config(tag + "low must be < high");
    if (!(r.margin > 0.0)) bad_config(tag + "margin must be > 0");
    if (j == 0 && r.low < r_p) bad_config(tag + "low must be >= r_p");
    if (j > 0 && r.low < prev_high) bad_config(tag + "ranges must be sorted and non-overlapping");
    prev_high = r.high;
  }
}

}  // namespace

void RegConfig::validate() const {
  if (!(r_p > 0.0) || !std::isfinite(r_p)) bad_config("r_p must be a positive finite number");
  if (!(depth_loss_weight >= 0.0) || !std::isfinite(depth_loss_weight)) {
    bad_config("depth_loss_weight must be >= 0");
  }
  if (const auto* u = std::get_if<UniformStrategy>(&strategy)) {
    if (!(u->r_n >= r_p) || !std::isfinite(u->r_n)) bad_config("uniform strategy needs r_n >= r_p");
    if (!(u->margin > 0.0) || !std::isfinite(u->margin)) bad_config("uniform margin must be > 0");
  } else if (const auto* m = std::get_if<MultiRangeStrategy>(&strategy)) {
    validate_ranges(r_p, *m);
  }
}

double RegConfig::margin(int subgroup) const {
  if (const auto* u = std::get_if<UniformStrategy>(&strategy)) {
    if (subgroup == 1) return u->margin;
  } else if (const auto* m = std::get_if<MultiRangeStrategy>(&strategy)) {
    if (subgroup >= 1 && static_cast<std::size_t>(subgroup) <= m->ranges.size()) {
      return m->ranges[static_cast<std::size_t>(subgroup - 1)].margin;
    }
  }
  throw Error(ErrorCode::ContractViolation,
              "no negative subgroup " + std::to_string(subgroup) + " in this strategy");
}

int RegConfig::subgroup_count() const noexcept {
  if (std::holds_alternative<UniformStrategy>(strategy)) return 1;
  if (const auto* m = std::get_if<MultiRangeStrategy>(&strategy)) {
    return static_cast<int>(m->ranges.size());
  }
  return 0;
}

double RegConfig::first_negative_bound() const {
  if (const auto* u = std::get_if<UniformStrategy>(&strategy)) return u->r_n;
  if (const auto* m = std::get_if<MultiRangeStrategy>(&strategy)) {
    if (!m->ranges.empty()) return m->ranges.front().low;
  }
  throw Error(ErrorCode::InvalidConfig, "strategy defines no negative group");
}

SampleLabel SampleLabel::negative(int subgroup) {
  if (subgroup < 1 || subgroup > std::numeric_limits<std::int16_t>::max()) {
    throw Error(ErrorCode::ContractViolation, "negative subgroup index must be >= 1");
  }
  return SampleLabel(static_cast<std::int16_t>(subgroup));
}

IdentMap::IdentMap(std::size_t height, std::size_t width)
    : height_(height), width_(width), labels_(height * width, SampleLabel::ignored()) {}

std::size_t IdentMap::count_positive() const noexcept {
  std::size_t n = 0;
  for (auto l : labels_) n += l.is_positive();
  return n;
}

std::size_t IdentMap::count_ignored() const noexcept {
  std::size_t n = 0;
  for (auto l : labels_) n += l.is_ignored();
  return n;
}

std::size_t IdentMap::count_negative(int subgroup) const noexcept {
  std::size_t n = 0;
  for (auto l : labels_) n += (l.subgroup() == subgroup && subgroup > 0);
  return n;
}

Grid1 differential_map(const Grid1& d_a, const Grid1& d_s) {
  if (!d_a.same_shape(d_s)) {
    throw Error(ErrorCode::ShapeError, "differential_map: depth maps differ in extent");
  }
  const std::size_t n = d_a.pixels();
  std::vector<double> values(n, 0.0);
  std::vector<std::uint8_t> valid(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    if (d_a.valid(p) && d_s.valid(p)) {
      values[p] = std::abs(d_a.value(p) - d_s.value(p));
      valid[p] = 1;
    }
  }
  return Grid1(d_a.height(), d_a.width(), std::move(values), std::move(valid));
}

SampleLabel classify_differential(double d_r, double r_p, const RegStrategy& strategy) {
  if (std::holds_alternative<NoRegularization>(strategy)) return SampleLabel::ignored();
  if (d_r < r_p) return SampleLabel::positive();
  if (const auto* u = std::get_if<UniformStrategy>(&strategy)) {
    return d_r > u->r_n ? SampleLabel::negative(1) : SampleLabel::ignored();
  }
  const auto& ranges = std::get<MultiRangeStrategy>(strategy).ranges;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    if (d_r <= ranges[j].low) break;  // sorted: every later range starts higher
    if (d_r < ranges[j].high) return SampleLabel::negative(static_cast<int>(j + 1));
  }
  return SampleLabel::ignored();
}

namespace {

IdentMap classify_map(const Grid1& d_r, double r_p, const RegStrategy& strategy) {
  IdentMap out(d_r.height(), d_r.width());
  for (std::size_t p = 0; p < d_r.pixels(); ++p) {
    if (d_r.valid(p)) out.set(p, classify_differential(d_r.value(p), r_p, strategy));
  }
  return out;
}

}  // namespace

IdentMap identify_uniform(const Grid1& d_r, double r_p, double r_n) {
  RegConfig cfg;
  cfg.r_p = r_p;
  cfg.strategy = UniformStrategy{r_n, 1.0};
  if (r_p > r_n) bad_config("identify_uniform: r_p must be <= r_n");
  cfg.validate();
  return classify_map(d_r, r_p, cfg.strategy);
}

IdentMap identify_multirange(const Grid1& d_r, double r_p, const MultiRangeStrategy& strategy) {
  if (!(r_p > 0.0)) bad_config("r_p must be > 0");
  validate_ranges(r_p, strategy);
  return classify_map(d_r, r_p, strategy);
}

IdentMap identify_multirange(const Grid1& d_r, const RegConfig& config) {
  const auto* m = std::get_if<MultiRangeStrategy>(&config.strategy);
  if (m == nullptr) bad_config("identify_multirange requires a multi-range strategy");
  return identify_multirange(d_r, config.r_p, *m);
}

IdentMap identify(const Grid1& d_r, const RegConfig& config) {
  config.validate();
  return classify_map(d_r, config.r_p, config.strategy);
}

}  // namespace metricdepth
