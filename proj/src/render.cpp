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

#include "cattlepose/render.hpp"

#include <algorithm>
#include <cmath>

namespace cattlepose {

Rgb limb_color(size_t edge) {
  static const Rgb palette[] = {
      {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
      {145, 30, 180}, {70, 240, 240},  {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
      {0, 128, 128},  {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
  };
  return palette[edge % (sizeof palette / sizeof palette[0])];
}

namespace {

void put(Image& img, long x, long y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int ch = 0; ch < 3; ++ch) img.at(static_cast<int>(x), static_cast<int>(y), ch) = c[static_cast<size_t>(ch)];
}

Rgb heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double r = std::clamp(3.0 * t, 0.0, 1.0), g = std::clamp(3.0 * t - 1.0, 0.0, 1.0),
               b = std::clamp(3.0 * t - 2.0, 0.0, 1.0);
  return {static_cast<uint8_t>(std::lround(255 * r)), static_cast<uint8_t>(std::lround(255 * g)),
          static_cast<uint8_t>(std::lround(255 * b))};
}

}  // namespace

void draw_line(Image& rgb, double x0, double y0, double x1, double y1, const Rgb& color) {
  const double len = std::max(std::fabs(x1 - x0), std::fabs(y1 - y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    put(rgb, std::lround(x0 + t * (x1 - x0)), std::lround(y0 + t * (y1 - y0)), color);
  }
}

void draw_marker(Image& rgb, double x, double y, int radius, const Rgb& color) {
  const long cx = std::lround(x), cy = std::lround(y);
  for (long dy = -radius; dy <= radius; ++dy) {
    for (long dx = -radius; dx <= radius; ++dx) put(rgb, cx + dx, cy + dy, color);
  }
}

void draw_cross(Image& rgb, double x, double y, int arm, const Rgb& color) {
  const long cx = std::lround(x), cy = std::lround(y);
  for (long d = -arm; d <= arm; ++d) {
    put(rgb, cx + d, cy + d, color);
    put(rgb, cx + d, cy - d, color);
  }
}

Image render_overlay(const Image& base, const std::vector<KeypointInstance>& instances,
                     const SkeletonSpec& skeleton, const std::vector<InstancePrediction>* predictions) {
  Image out = base.to_rgb();
  if (predictions) {
    for (const auto& p : *predictions) {
      for (const auto& k : p.keypoints) draw_cross(out, k.x, k.y, 3, kPredictionColor);
    }
  }
  for (const auto& inst : instances) {
    for (size_t e = 0; e < skeleton.edges.size(); ++e) {
      const auto [a, b] = skeleton.edges[e];
      const Keypoint& ka = inst.keypoints[static_cast<size_t>(a)];
      const Keypoint& kb = inst.keypoints[static_cast<size_t>(b)];
      if (ka.v > 0 && kb.v > 0) draw_line(out, ka.x, ka.y, kb.x, kb.y, limb_color(e));
    }
  }
  for (const auto& inst : instances) {
    for (const auto& k : inst.keypoints) {
      if (k.v > 0) draw_marker(out, k.x, k.y, 1, k.v == 2 ? kVisibleColor : kPartialColor);
    }
  }
  return out;
}

Image render_heat_strips(const Tensor& x_logits, const Tensor& y_logits, int index, int strip_height) {
  if (x_logits.rank() != 3 || y_logits.rank() != 3) throw ShapeError("heat strips need [N,K,bins] logits");
  const int64_t k = x_logits.dim(1), wb = x_logits.dim(2), hb = y_logits.dim(2);
  Image out = Image::blank(static_cast<int>(std::max(wb, hb)), static_cast<int>(2 * k * strip_height), 3);
  auto strip = [&](const float* logits, int64_t bins, int row0) {
    const float top = *std::max_element(logits, logits + bins);
    double z = 0.0;
    for (int64_t b = 0; b < bins; ++b) z += std::exp(static_cast<double>(logits[b]) - top);
    const double peak = 1.0 / z;
    for (int64_t b = 0; b < bins; ++b) {
      const double p = std::exp(static_cast<double>(logits[b]) - top) / z;
      const Rgb c = heat(p / peak);
      for (int r = 0; r < strip_height; ++r) put(out, b, row0 + r, c);
    }
  };
  for (int64_t j = 0; j < k; ++j) {
    strip(x_logits.vec().data() + (index * k + j) * wb, wb, static_cast<int>(2 * j * strip_height));
    strip(y_logits.vec().data() + (index * k + j) * hb, hb, static_cast<int>((2 * j + 1) * strip_height));
  }
  return out;
}

}  // namespace cattlepose
