// Copyright 2026 The cattlepose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "cattlepose/tensor.hpp"

namespace cattlepose {

// Geometry of a 2D convolution over NCHW feature maps. Weight layout is
// (out_channels, in_channels / groups, kernel_h, kernel_w).
struct ConvSpec {
  int64_t in_channels = 1;
  int64_t out_channels = 1;
  int kernel_h = 1, kernel_w = 1;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dilation_h = 1, dilation_w = 1;
  int64_t groups = 1;

  static ConvSpec pointwise(int64_t in, int64_t out);
  // Square kernel with "same" padding at stride 1 (pad = dilation * (k - 1) / 2).
  static ConvSpec dense(int64_t in, int64_t out, int kernel, int stride = 1);
  static ConvSpec depthwise(int64_t channels, int kernel, int stride = 1, int dilation = 1);

  void validate() const;
  Shape weight_shape() const;
  int64_t out_h(int64_t h) const;
  int64_t out_w(int64_t w) const;
  bool is_depthwise() const { return groups == in_channels && groups == out_channels; }
};

// Zero-padded cross-correlation. `bias` may be an undefined Tensor.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, const ConvSpec& spec);

enum class ActivationKind { kSigmoid, kRelu, kLeakyRelu, kHardSwish };

struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  float slope = 0.01f;  // leaky_relu only, must lie in (0, 1)

  // Accepts "sigmoid", "relu", "hardswish", "leaky_relu" and "leaky_relu:<slope>".
  static Activation parse(const std::string& text);
};

Tensor activation(const Tensor& x, const Activation& act);
Tensor hardswish(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float slope);

inline constexpr float kNormEpsilon = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.1f;

// Normalizes each (n, h, w) channel vector to zero mean / unit variance, then
// applies the per-channel affine gamma, beta.
Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           float eps = kNormEpsilon);

enum class NormMode { kTrain, kEval };

struct BatchNormStats {
  std::vector<float> mean;
  std::vector<float> var;
  bool initialized() const { return !mean.empty(); }
  void reset(int64_t channels);  // mean 0, var 1
};

// Per-channel normalization over (N, H, W). Train mode normalizes with batch
// statistics and folds them into `stats` (the first update copies them);
// eval mode requires initialized stats.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  BatchNormStats& stats, NormMode mode, float momentum = kBatchNormMomentum,
                  float eps = kNormEpsilon);

enum class PoolKind { kAvg, kMax };

Tensor pool2d(const Tensor& x, PoolKind kind, int kernel_h, int kernel_w, int stride_h,
              int stride_w);
// Pools the whole (H, W) plane: [N,C,H,W] -> [N,C,1,1].
Tensor global_pool(const Tensor& x, PoolKind kind);
// Pools across channels at each pixel: [N,C,H,W] -> [N,1,H,W].
Tensor channel_pool(const Tensor& x, PoolKind kind);

// Bilinear x2 upsampling with half-pixel centers (align_corners = false).
Tensor bilinear_upsample_x2(const Tensor& x);

// Elementwise with broadcasting between equal-rank tensors (extent 1 broadcasts).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& x, int64_t begin, int64_t end);

enum class PadMode { kZero, kReflect, kReplicate };

struct Padding2d {
  int top = 0, bottom = 0, left = 0, right = 0;
};

Tensor pad2d(const Tensor& x, const Padding2d& pad, PadMode mode);
Tensor crop2d(const Tensor& x, int64_t top, int64_t left, int64_t height, int64_t width);

// y = x W^T + b for x [M, in], W [out, in], b [out] (b may be undefined).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace cattlepose
