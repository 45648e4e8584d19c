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
#include <vector>

#include "cattlepose/dataset.hpp"
#include "cattlepose/image.hpp"
#include "cattlepose/train.hpp"

namespace cattlepose {

using Rgb = std::array<uint8_t, 3>;

inline constexpr Rgb kVisibleColor = {0, 255, 0};
inline constexpr Rgb kPartialColor = {255, 255, 0};
inline constexpr Rgb kPredictionColor = {255, 0, 255};

Rgb limb_color(size_t edge);

void draw_line(Image& rgb, double x0, double y0, double x1, double y1, const Rgb& color);
// Filled (2r+1) x (2r+1) square centred on the rounded position.
void draw_marker(Image& rgb, double x, double y, int radius, const Rgb& color);
void draw_cross(Image& rgb, double x, double y, int arm, const Rgb& color);

// Limb edges between labeled keypoints in limb colours, then keypoints
// coloured by visibility (v = 0 skipped). Predictions, when given, are drawn
// as crosses underneath the ground truth.
Image render_overlay(const Image& base, const std::vector<KeypointInstance>& instances,
                     const SkeletonSpec& skeleton,
                     const std::vector<InstancePrediction>* predictions = nullptr);

// Per keypoint: a softmax strip over x bins, then one over y bins, each
// `strip_height` rows tall, normalized to the row peak.
Image render_heat_strips(const Tensor& x_logits, const Tensor& y_logits, int index, int strip_height = 4);

}  // namespace cattlepose
