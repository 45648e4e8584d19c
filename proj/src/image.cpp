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

#include "cattlepose/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cattlepose {

Image Image::blank(int width, int height, int channels, uint8_t value) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw ImageError("invalid image geometry " + std::to_string(width) + "x" +
                     std::to_string(height) + "x" + std::to_string(channels));
  }
  Image img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.pixels.assign(static_cast<size_t>(width) * height * channels, value);
  return img;
}

Image Image::to_rgb() const {
  if (channels == 3) return *this;
  Image out = blank(width, height, 3);
  for (size_t i = 0; i < pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = pixels[i];
  }
  return out;
}

namespace {

class PnmReader {
 public:
  explicit PnmReader(const std::string& bytes) : s_(bytes) {}

  std::string magic() {
    if (s_.size() < 2 || s_[0] != 'P') throw ImageError("not a portable any-map (bad magic)");
    pos_ = 2;
    return s_.substr(0, 2);
  }

  long number() {
    skip_space();
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      throw ImageError("malformed any-map header at byte " + std::to_string(pos_));
    }
    long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_++] - '0');
      if (v > 1000000) throw ImageError("any-map header value out of range");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  size_t raster_start() {
    if (pos_ >= s_.size() || !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
      throw ImageError("missing separator before any-map raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size()) {
      if (s_[pos_] == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& s_;
  size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(const std::string& bytes) {
  PnmReader r(bytes);
  const std::string magic = r.magic();
  int channels;
  bool binary;
  if (magic == "P5") {
    channels = 1, binary = true;
  } else if (magic == "P6") {
    channels = 3, binary = true;
  } else if (magic == "P2") {
    channels = 1, binary = false;
  } else if (magic == "P3") {
    channels = 3, binary = false;
  } else {
    throw ImageError("unsupported any-map type " + magic + " (expected P2, P3, P5 or P6)");
  }
  const long w = r.number(), h = r.number(), maxval = r.number();
  if (w <= 0 || h <= 0) throw ImageError("any-map has empty raster");
  if (maxval <= 0 || maxval > 255) {
    throw ImageError("any-map maxval " + std::to_string(maxval) + " unsupported (1..255)");
  }
  Image img = Image::blank(static_cast<int>(w), static_cast<int>(h), channels);
  const size_t n = img.pixels.size();
  if (binary) {
    const size_t start = r.raster_start();
    if (bytes.size() < start + n) throw ImageError("any-map raster truncated");
    for (size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<uint8_t>(bytes[start + i]);
  } else {
    for (size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<uint8_t>(r.number());
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) {
      if (p > maxval) throw ImageError("any-map sample exceeds maxval");
      p = static_cast<uint8_t>((p * 255 + maxval / 2) / maxval);
    }
  }
  return img;
}

std::string encode_pnm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw ImageError("can only encode gray or RGB");
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_pnm(ss.str());
  } catch (const ImageError& e) {
    throw ImageError(path + ": " + e.what());
  }
}

void write_pnm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write image " + path);
  const std::string bytes = encode_pnm(image);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("short write to " + path);
}

Affine2 Affine2::translation(double tx, double ty) { return {1, 0, tx, 0, 1, ty}; }

Affine2 Affine2::scaling(double sx, double sy) { return {sx, 0, 0, 0, sy, 0}; }

Affine2 Affine2::rotation(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c, -s, 0, s, c, 0};
}

Affine2 Affine2::about(double cx, double cy, double radians, double scale) {
  const Affine2 rs = rotation(radians).after(scaling(scale, scale));
  return translation(cx, cy).after(rs.after(translation(-cx, -cy)));
}

void Affine2::apply(double x, double y, double& ox, double& oy) const {
  ox = a * x + b * y + c;
  oy = d * x + e * y + f;
}

Affine2 Affine2::inverse() const {
  const double det = determinant();
  if (!std::isfinite(det) || std::fabs(det) < 1e-12) throw ImageError("affine map is singular");
  Affine2 r;
  r.a = e / det;
  r.b = -b / det;
  r.d = -d / det;
  r.e = a / det;
  r.c = -(r.a * c + r.b * f);
  r.f = -(r.d * c + r.e * f);
  return r;
}

Affine2 Affine2::after(const Affine2& first) const {
  Affine2 r;
  r.a = a * first.a + b * first.d;
  r.b = a * first.b + b * first.e;
  r.c = a * first.c + b * first.f + c;
  r.d = d * first.a + e * first.d;
  r.e = d * first.b + e * first.e;
  r.f = d * first.c + e * first.f + f;
  return r;
}

double sample_bilinear(const Image& image, double x, double y, int channel, double fill) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double tx = x - fx, ty = y - fy;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= image.width || yi >= image.height) return fill;
    return image.at(xi, yi, channel);
  };
  if (x0 < -1 || y0 < -1 || x0 >= image.width || y0 >= image.height) return fill;
  return (1 - ty) * ((1 - tx) * px(x0, y0) + tx * px(x0 + 1, y0)) +
         ty * ((1 - tx) * px(x0, y0 + 1) + tx * px(x0 + 1, y0 + 1));
}

std::vector<float> resample_planar(const Image& src, const Affine2& out_to_src, int out_w,
                                   int out_h, double fill) {
  const size_t plane = static_cast<size_t>(out_w) * out_h;
  std::vector<float> out(plane * static_cast<size_t>(src.channels));
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      double sx, sy;
      out_to_src.apply(u, v, sx, sy);
      for (int c = 0; c < src.channels; ++c) {
        out[c * plane + static_cast<size_t>(v) * out_w + u] =
            static_cast<float>(sample_bilinear(src, sx, sy, c, fill));
      }
    }
  }
  return out;
}

Image warp_affine(const Image& src, const Affine2& out_to_src, int out_w, int out_h, uint8_t fill) {
  const std::vector<float> planar = resample_planar(src, out_to_src, out_w, out_h, fill);
  Image out = Image::blank(out_w, out_h, src.channels);
  const size_t plane = static_cast<size_t>(out_w) * out_h;
  for (size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < src.channels; ++c) {
      const double v = std::nearbyint(planar[c * plane + i]);
      out.pixels[i * src.channels + c] = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace cattlepose
