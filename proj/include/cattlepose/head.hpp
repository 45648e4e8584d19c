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

#include <memory>
#include <string>
#include <vector>

#include "cattlepose/config.hpp"
#include "cattlepose/ops.hpp"
#include "cattlepose/params.hpp"

namespace cattlepose {

// Channel-avg and channel-max maps -> 3x3 conv (2 -> 1) -> sigmoid, scaled onto X.
struct SabParams {
  Tensor conv_w, conv_b;
};

// conv1x1 (C -> C/r) -> BN -> ReLU -> conv1x1 (C/r -> C) -> sigmoid
struct ChannelGateParams {
  Tensor reduce_w, reduce_b, bn_gamma, bn_beta;
  std::shared_ptr<BatchNormStats> bn_stats;
  Tensor expand_w, expand_b;
};

// [avg, max] descriptors (2C x 1 x 1) -> CBL (1x1 conv, BN, LeakyReLU) ->
// chunk into avg / max halves -> one gate each; output X * g_avg * g_max.
struct CabParams {
  Tensor cbl_w, cbl_b, cbl_gamma, cbl_beta;
  std::shared_ptr<BatchNormStats> cbl_stats;
  ChannelGateParams avg_gate, max_gate;
};

// sigmoid(X + avgpool2x2(depthwise3x3(upsample2x(X))))
struct ScbParams {
  Tensor conv_w;  // [C,1,3,3], no bias
};

struct Sc2HeadParams {
  SabParams sab;
  CabParams cab;
  ScbParams scb;
  Tensor fuse_w, fuse_b;  // 1x1, 2C -> C
};

struct SimccParams {
  Tensor keypoint_w, keypoint_b;  // 1x1, C -> K
  Tensor x_w, x_b;                // [x_bins, h*w]
  Tensor y_w, y_b;                // [y_bins, h*w]
};

inline constexpr float kCblSlope = 0.1f;

SabParams make_sab(ParamStore& store, const std::string& prefix, Rng& rng);
CabParams make_cab(ParamStore& store, BufferStore& buffers, const std::string& prefix,
                   int64_t channels, int reduction, Rng& rng);
ScbParams make_scb(ParamStore& store, const std::string& prefix, int64_t channels, Rng& rng);
Sc2HeadParams make_sc2head(ParamStore& store, BufferStore& buffers, const std::string& prefix,
                           const HeadConfig& cfg, Rng& rng);
SimccParams make_simcc(ParamStore& store, const std::string& prefix, const HeadConfig& cfg,
                       int64_t feature_h, int64_t feature_w, Rng& rng);

Tensor sab(const Tensor& x, const SabParams& p);
Tensor cab(const Tensor& x, const CabParams& p, NormMode mode);
Tensor scb(const Tensor& x, const ScbParams& p);
// conv1x1(concat[SA, CA] * tile(SC)) + X
Tensor sc2head_features(const Tensor& x, const Sc2HeadParams& p, NormMode mode);

struct SimccLogits {
  Tensor x;  // [N, K, x_bins]
  Tensor y;  // [N, K, y_bins]
};

SimccLogits simcc_project(const Tensor& features, const HeadConfig& cfg, const SimccParams& p);

struct PredictedKeypoint {
  float x = 0, y = 0;  // crop-frame pixels
  float score = 0;
};
using KeypointPrediction = std::vector<PredictedKeypoint>;

// Argmax bin / split_ratio per axis (ties go to the lowest bin); score is the
// geometric mean of the two softmax peaks.
std::vector<KeypointPrediction> simcc_decode(const Tensor& x_logits, const Tensor& y_logits,
                                             const HeadConfig& cfg);

// Normalized Gaussian label over `bins` bins centred at coord * split_ratio.
// The centre is clamped into [0, bins - 1]; `clamped` reports whether it was.
std::vector<float> simcc_target(double coord, int64_t bins, double split_ratio, double sigma_bins,
                                bool* clamped = nullptr);

// Ground truth for one batch in crop-frame pixels: [N][K] (x, y, visibility).
struct KeypointTarget {
  float x = 0, y = 0;
  int visibility = 0;
};
using TargetBatch = std::vector<std::vector<KeypointTarget>>;

struct SimccLoss {
  Tensor loss;                  // scalar, differentiable w.r.t. both logit tensors
  double cross_entropy = 0.0;   // mean soft cross-entropy (x + y) per visible keypoint
  double target_entropy = 0.0;  // mean label entropy (x + y) per visible keypoint
  int visible = 0;
  int clamped = 0;  // labels whose centre fell outside the bin range
};

// Soft cross-entropy against Gaussian labels minus the label entropy (the KL
// divergence), averaged over keypoints with visibility > 0. The minimum is 0,
// reached when the softmax equals the label. No visible keypoints -> 0.
SimccLoss simcc_loss(const Tensor& x_logits, const Tensor& y_logits, const TargetBatch& targets,
                     const HeadConfig& cfg);

}  // namespace cattlepose
