#include "metricdepth/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metricdepth/error.hpp"
#include "metricdepth/rng.hpp"

namespace metricdepth {

void ModelShape::validate() const {
  if (input_channels < 1 || hidden < 1 || feature_channels < 1) {
    throw Error(ErrorCode::InvalidConfig, "model layer widths must be >= 1");
  }
  if (parameter_count() >= 10000) {
    throw Error(ErrorCode::InvalidConfig, "model must have fewer than 10000 parameters");
  }
}

std::size_t ModelShape::parameter_count() const noexcept {
  return hidden * input_channels + hidden + hidden * hidden + hidden +
         feature_channels * hidden + feature_channels + feature_channels + 1;
}

ToyModel::Offsets ToyModel::offsets_for(const ModelShape& s) noexcept {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + s.hidden * s.input_channels;
  o.w2 = o.b1 + s.hidden;
  o.b2 = o.w2 + s.hidden * s.hidden;
  o.w3 = o.b2 + s.hidden;
  o.b3 = o.w3 + s.feature_channels * s.hidden;
  o.w4 = o.b3 + s.feature_channels;
  o.b4 = o.w4 + s.feature_channels;
  o.end = o.b4 + 1;
  return o;
}

ToyModel::ToyModel(const ModelShape& shape, std::uint64_t seed, double head_bias)
    : shape_(shape), off_(offsets_for(shape)) {
  shape_.validate();
  params_.assign(off_.end, 0.0);
  SeedRng rng(seed);
  auto fill = [&](std::size_t begin, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t k = 0; k < fan_in * fan_out; ++k) params_[begin + k] = rng.uniform(-bound, bound);
  };
  fill(off_.w1, shape_.input_channels, shape_.hidden);
  fill(off_.w2, shape_.hidden, shape_.hidden);
  fill(off_.w3, shape_.hidden, shape_.feature_channels);
  params_[off_.b4] = head_bias;
}

ToyModel::ToyModel(const ModelShape& shape, std::vector<double> parameters)
    : shape_(shape), off_(offsets_for(shape)), params_(std::move(parameters)) {
  shape_.validate();
  if (params_.size() != off_.end) {
    throw Error(ErrorCode::ShapeError, "expected " + std::to_string(off_.end) + " parameters, got " +
                                           std::to_string(params_.size()));
  }
}

ToyModel::Output ToyModel::forward(const Grid3& image) const {
  if (image.channels() != shape_.input_channels) {
    throw Error(ErrorCode::ShapeError, "model expects " + std::to_string(shape_.input_channels) +
                                           " input channels, got " +
                                           std::to_string(image.channels()));
  }
  const std::size_t n = image.pixels();
  const std::size_t ci = shape_.input_channels;
  const std::size_t hd = shape_.hidden;
  const std::size_t cf = shape_.feature_channels;
  const double* P = params_.data();

  std::vector<double> h1(n * hd), h2(n * hd), feat(n * cf), pred(n);
  const auto x = image.data();
  for (std::size_t p = 0; p < n; ++p) {
    const double* xp = &x[p * ci];
    double* a1 = &h1[p * hd];
    for (std::size_t r = 0; r < hd; ++r) {
      double z = P[off_.b1 + r];
      for (std::size_t k = 0; k < ci; ++k) z += P[off_.w1 + r * ci + k] * xp[k];
      a1[r] = std::tanh(z);
    }
    double* a2 = &h2[p * hd];
    for (std::size_t r = 0; r < hd; ++r) {
      double z = P[off_.b2 + r];
      for (std::size_t k = 0; k < hd; ++k) z += P[off_.w2 + r * hd + k] * a1[k];
      a2[r] = std::tanh(z);
    }
    double* f = &feat[p * cf];
    double z_out = P[off_.b4];
    for (std::size_t r = 0; r < cf; ++r) {
      double z = P[off_.b3 + r];
      for (std::size_t k = 0; k < hd; ++k) z += P[off_.w3 + r * hd + k] * a2[k];
      f[r] = z;
      z_out += P[off_.w4 + r] * z;
    }
    pred[p] = std::exp(z_out);
  }

  Grid3 features(image.height(), image.width(), cf, std::move(feat));
  for (double v : pred) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw Error(ErrorCode::Divergence, "model prediction is not a positive finite number");
    }
  }
  return Output{std::move(features), Grid1(image.height(), image.width(), std::move(pred)),
                Cache{image, std::move(h1), std::move(h2)}};
}

std::vector<double> ToyModel::backward(const Output& out, const Grid3& grad_features,
                                       std::span<const double> grad_pred) const {
  if (!grad_features.same_shape(out.features) || grad_pred.size() != out.pred.pixels()) {
    throw Error(ErrorCode::ShapeError, "backward: gradient shapes do not match the forward pass");
  }
  const std::size_t n = out.pred.pixels();
  const std::size_t ci = shape_.input_channels;
  const std::size_t hd = shape_.hidden;
  const std::size_t cf = shape_.feature_channels;
  const double* P = params_.data();
  std::vector<double> G(params_.size(), 0.0);

  const auto x = out.cache.input.data();
  const auto f_all = out.features.data();
  const auto gf_all = grad_features.data();
  std::vector<double> gf(cf), g2(hd), g1(hd);

  for (std::size_t p = 0; p < n; ++p) {
    // pred = exp(z_out): dL/dz_out = dL/dpred * pred.
    const double gz = grad_pred[p] * out.pred.value(p);
    const double* f = &f_all[p * cf];
    G[off_.b4] += gz;
    for (std::size_t r = 0; r < cf; ++r) {
      G[off_.w4 + r] += gz * f[r];
      gf[r] = gf_all[p * cf + r] + gz * P[off_.w4 + r];
    }

    const double* a2 = &out.cache.h2[p * hd];
    std::fill(g2.begin(), g2.end(), 0.0);
    for (std::size_t r = 0; r < cf; ++r) {
      if (gf[r] == 0.0) continue;
      G[off_.b3 + r] += gf[r];
      for (std::size_t k = 0; k < hd; ++k) {
        G[off_.w3 + r * hd + k] += gf[r] * a2[k];
        g2[k] += gf[r] * P[off_.w3 + r * hd + k];
      }
    }

    const double* a1 = &out.cache.h1[p * hd];
    std::fill(g1.begin(), g1.end(), 0.0);
    for (std::size_t r = 0; r < hd; ++r) {
      const double gz2 = g2[r] * (1.0 - a2[r] * a2[r]);
      G[off_.b2 + r] += gz2;
      for (std::size_t k = 0; k < hd; ++k) {
        G[off_.w2 + r * hd + k] += gz2 * a1[k];
        g1[k] += gz2 * P[off_.w2 + r * hd + k];
      }
    }

    const double* xp = &x[p * ci];
    for (std::size_t r = 0; r < hd; ++r) {
      const double gz1 = g1[r] * (1.0 - a1[r] * a1[r]);
      G[off_.b1 + r] += gz1;
      for (std::size_t k = 0; k < ci; ++k) G[off_.w1 + r * ci + k] += gz1 * xp[k];
    }
  }
  return G;
}

}  // namespace metricdepth
