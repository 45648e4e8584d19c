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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cattlepose {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit interleaved raster, 1 (gray) or 3 (RGB) channels, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<uint8_t> pixels;

  static Image blank(int width, int height, int channels, uint8_t value = 0);
  bool empty() const { return pixels.empty(); }
  uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  Image to_rgb() const;
};

// Binary (P5/P6) and ASCII (P2/P3) portable any-map, maxval <= 255.
Image decode_pnm(const std::string& bytes);
std::string encode_pnm(const Image& image);  // P5 for gray, P6 for RGB
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& image);

// 2x3 affine map (x, y) -> (a x + b y + c, d x + e y + f).
struct Affine2 {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  static Affine2 identity() { return {}; }
  static Affine2 translation(double tx, double ty);
  static Affine2 scaling(double sx, double sy);
  static Affine2 rotation(double radians);
  // Rotation by `radians` and uniform `scale` about (cx, cy).
  static Affine2 about(double cx, double cy, double radians, double scale);

  void apply(double x, double y, double& ox, double& oy) const;
  Affine2 inverse() const;  // throws ImageError when singular
  // (*this) after `first`: x -> this(first(x)).
  Affine2 after(const Affine2& first) const;
  double determinant() const { return a * e - b * d; }
};

// Bilinear sample at a continuous pixel-index position; outside samples
// read `fill`.
double sample_bilinear(const Image& image, double x, double y, int channel, double fill = 0.0);

// Resamples into an out_w x out_h raster: pixel (u, v) reads the source at
// out_to_src(u, v). Result is channel-planar floats in source units [0, 255].
std::vector<float> resample_planar(const Image& src, const Affine2& out_to_src, int out_w,
                                   int out_h, double fill = 0.0);

// Same warp, rounded back to an interleaved 8-bit image.
Image warp_affine(const Image& src, const Affine2& out_to_src, int out_w, int out_h,
                  uint8_t fill = 0);

}  // namespace cattlepose
