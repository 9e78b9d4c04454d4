#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "metricdepth/grid.hpp"

namespace metricdepth {

struct ModelShape {
  std::size_t input_channels = 3;
  std::size_t hidden = 16;
  std::size_t feature_channels = 8;

  void validate() const;
  std::size_t parameter_count() const noexcept;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Per-pixel encoder and depth head:
///
///   h1 = tanh(W1 x + b1)          hidden
///   h2 = tanh(W2 h1 + b2)         hidden
///   f  = W3 h2 + b3               feature_channels   <- regularized map
///   pred = exp(w4 . f + b4)       1
///
/// All parameters live in one flat vector so optimizers and finite
/// differences can treat the model as a point in R^P.
class ToyModel {
 public:
  /// Scaled-uniform init for the encoder. The head weights w4 start at zero
  /// and b4 at `head_bias`, so an untrained model predicts exp(head_bias)
  /// everywhere (1 m for the default).
  ToyModel(const ModelShape& shape, std::uint64_t seed, double head_bias = 0.0);
  ToyModel(const ModelShape& shape, std::vector<double> parameters);

  const ModelShape& shape() const noexcept { return shape_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  struct Cache {
    Grid3 input;
    std::vector<double> h1;
    std::vector<double> h2;
  };

  struct Output {
    Grid3 features;
    Grid1 pred;
    Cache cache;
  };

  Output forward(const Grid3& image) const;

  /// Parameter gradient given dL/dfeatures and dL/dpred (per pixel).
  /// The gradient through pred is combined with the direct feature gradient.
  std::vector<double> backward(const Output& out, const Grid3& grad_features,
                               std::span<const double> grad_pred) const;

 private:
  struct Offsets {
    std::size_t w1, b1, w2, b2, w3, b3, w4, b4, end;
  };
  static Offsets offsets_for(const ModelShape& shape) noexcept;

  ModelShape shape_;
  Offsets off_;
  std::vector<double> params_;
};

}  // namespace metricdepth
