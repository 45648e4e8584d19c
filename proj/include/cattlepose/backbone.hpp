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

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "cattlepose/config.hpp"
#include "cattlepose/params.hpp"
#include "cattlepose/wavelet.hpp"

namespace cattlepose {

struct StemParams {
  Tensor weight, bias;  // 3x3 stride 2, 3 -> stem_channels
};

// expand 1x1 -> hardswish -> depthwise 3x3 (stride) -> hardswish -> project 1x1
struct InvertedResidualParams {
  Tensor expand_w, expand_b;
  Tensor depthwise_w, depthwise_b;
  Tensor project_w, project_b;
};

// Wavelet-domain convolution fused with a fixed Gaussian branch.
struct SfeParams {
  SubbandKernels wavelet;   // 4 x [C,1,3,3]
  Tensor fuse_w, fuse_b;    // 1x1, C -> C
  Tensor refine_w, refine_b;  // 3x3, C -> C
};

// Three dilated depthwise branches (dilation 1, 3, 5) summed and layer-normed.
struct RaParams {
  Tensor channel_bias;  // [C], added to the block input before branching
  std::array<Tensor, 3> branch_w, branch_b;
  Tensor norm_gamma, norm_beta;
};

using StageParams = std::variant<InvertedResidualParams, SfeParams, RaParams>;

struct BackboneParams {
  StemParams stem;
  std::vector<StageConfig> stages;  // active stages only
  std::vector<StageParams> stage_params;
};

inline constexpr std::array<int, 3> kRaDilations = {1, 3, 5};

InvertedResidualParams make_inverted_residual(ParamStore& store, const std::string& prefix,
                                              const StageConfig& cfg, Rng& rng);
SfeParams make_sfe(ParamStore& store, const std::string& prefix, int64_t channels, Rng& rng);
RaParams make_ra(ParamStore& store, const std::string& prefix, int64_t channels, Rng& rng);
BackboneParams make_backbone(ParamStore& store, const ModelConfig& cfg, Rng& rng);

Tensor inverted_residual(const Tensor& x, const InvertedResidualParams& p, const StageConfig& cfg);
Tensor sfe_block(const Tensor& x, const SfeParams& p);
Tensor ra_block(const Tensor& x, const RaParams& p);
Tensor stem_forward(const Tensor& image, const StemParams& p);

// Image [N,3,H,W] at the configured resolution -> stride-8 feature map.
Tensor backbone_forward(const Tensor& image, const ModelConfig& cfg, const BackboneParams& params);

// Zeroes the output projection of a block so it reduces to its residual path
// (inverted residual: project conv; SFE: refine conv; RA: norm affine).
void zero_final_projection(StageParams& params);

}  // namespace cattlepose
