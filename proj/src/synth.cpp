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

#include "cattlepose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "cattlepose/params.hpp"

namespace cattlepose {

namespace {

struct Capsule {
  int a, b;       // joint indices
  double radius;  // fraction of figure length
  int shade_delta;
};

// Torso, neck and head first, then far-side (right) limbs, then near-side.
const std::vector<Capsule>& capsules() {
  static const std::vector<Capsule> c = {
      {3, 2, 0.16, 0},   {2, 1, 0.15, 0},    {1, 0, 0.07, 25},
      {7, 8, 0.045, -45}, {8, 9, 0.035, -45}, {13, 14, 0.05, -45}, {14, 15, 0.035, -45},
      {4, 5, 0.045, 35},  {5, 6, 0.035, 35},  {10, 11, 0.05, 35},  {11, 12, 0.035, 35},
  };
  return c;
}

double seg_dist2(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a[0] + t * dx - px, ey = a[1] + t * dy - py;
  return ex * ex + ey * ey;
}

template <typename F>
void for_each_capsule_pixel(const Figure& fig, int width, int height, F&& fn) {
  for (const Capsule& c : capsules()) {
    const auto& a = fig.joints[static_cast<size_t>(c.a)];
    const auto& b = fig.joints[static_cast<size_t>(c.b)];
    const double r = c.radius * fig.length;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a[0], b[0]) - r)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a[0], b[0]) + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a[1], b[1]) - r)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a[1], b[1]) + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (seg_dist2(x, y, a, b) <= r * r) fn(x, y, c);
      }
    }
  }
}

struct Pose {
  double cx, cy;       // spine_mid
  double length;
  double tilt;         // radians, positive raises the head end
  int facing;          // +1 head towards +x, -1 towards -x
  bool lifted_front;   // mounting animal: forelimbs raised
};

Figure build_figure(const Pose& p, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Figure f;
  f.length = p.length;
  const double L = p.length;
  // Unit vectors in image coordinates (y grows downward).
  const double ux = p.facing * std::cos(p.tilt), uy = -std::sin(p.tilt);
  const double nx = p.facing * std::sin(p.tilt), ny = std::cos(p.tilt);  // body "down"
  auto at = [&](double along, double down) -> std::array<double, 2> {
    return {p.cx + along * ux + down * nx, p.cy + along * uy + down * ny};
  };
  auto& J = f.joints;
  J[2] = at(0, 0);
  J[1] = at(0.5 * L, -0.05 * L);
  J[3] = at(-0.5 * L, -0.05 * L);
  const double head_angle = (0.55 + 0.35 * jitter(rng));  // radians above the spine
  const double hl = 0.38 * L;
  J[0] = {J[1][0] + hl * (ux * std::cos(head_angle) + nx * -std::sin(head_angle)),
          J[1][1] + hl * (uy * std::cos(head_angle) + ny * -std::sin(head_angle))};

  auto leg = [&](int top, int mid, int end, std::array<double, 2> root, double swing, double bend,
                 bool lifted) {
    J[static_cast<size_t>(top)] = root;
    const double seg = 0.32 * L;
    // Angle measured from straight down, positive towards the facing side.
    double a1 = swing;
    if (lifted) a1 = 1.1 + 0.35 * jitter(rng);
    const double dx1 = p.facing * std::sin(a1), dy1 = std::cos(a1);
    J[static_cast<size_t>(mid)] = {root[0] + seg * dx1, root[1] + seg * dy1};
    const double a2 = a1 + bend;
    const double dx2 = p.facing * std::sin(a2), dy2 = std::cos(a2);
    J[static_cast<size_t>(end)] = {J[static_cast<size_t>(mid)][0] + seg * dx2,
                                   J[static_cast<size_t>(mid)][1] + seg * dy2};
  };
  const double depth = 0.06 * L;  // far-side limbs sit slightly behind
  const std::array<double, 2> shoulder = at(0.38 * L, 0.12 * L);
  const std::array<double, 2> hip = at(-0.4 * L, 0.1 * L);
  leg(4, 5, 6, shoulder, 0.35 * jitter(rng), -0.45 * std::fabs(jitter(rng)), p.lifted_front);
  leg(7, 8, 9, {shoulder[0] + p.facing * depth, shoulder[1] - 0.3 * depth}, 0.35 * jitter(rng),
      -0.45 * std::fabs(jitter(rng)), p.lifted_front);
  leg(10, 11, 12, hip, 0.3 * jitter(rng), 0.45 * std::fabs(jitter(rng)), false);
  leg(13, 14, 15, {hip[0] + p.facing * depth, hip[1] - 0.3 * depth}, 0.3 * jitter(rng),
      0.45 * std::fabs(jitter(rng)), false);
  f.shade = static_cast<uint8_t>(std::uniform_int_distribution<int>(150, 200)(rng));
  return f;
}

bool fits(const Figure& f, int width, int height, double margin) {
  for (const auto& j : f.joints) {
    if (j[0] < margin || j[1] < margin || j[0] > width - 1 - margin || j[1] > height - 1 - margin) {
      return false;
    }
  }
  return true;
}

KeypointInstance make_instance(const Figure& f, int width, int height) {
  KeypointInstance inst;
  double x0 = width, y0 = height, x1 = -1, y1 = -1;
  for_each_capsule_pixel(f, width, height, [&](int x, int y, const Capsule&) {
    x0 = std::min<double>(x0, x);
    y0 = std::min<double>(y0, y);
    x1 = std::max<double>(x1, x);
    y1 = std::max<double>(y1, y);
  });
  inst.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  inst.area = inst.bbox.w * inst.bbox.h;
  for (size_t k = 0; k < f.joints.size(); ++k) {
    inst.keypoints[k] = {f.joints[k][0], f.joints[k][1], 2};
  }
  return inst;
}

}  // namespace

std::vector<uint8_t> figure_mask(const Figure& fig, int width, int height) {
  std::vector<uint8_t> mask(static_cast<size_t>(width) * height, 0);
  for_each_capsule_pixel(fig, width, height, [&](int x, int y, const Capsule&) {
    mask[static_cast<size_t>(y) * width + x] = 1;
  });
  return mask;
}

void paint_figure(Image& image, const Figure& fig) {
  for_each_capsule_pixel(fig, image.width, image.height, [&](int x, int y, const Capsule& c) {
    const int v = std::clamp(static_cast<int>(fig.shade) + c.shade_delta, 0, 255);
    for (int ch = 0; ch < image.channels; ++ch) image.at(x, y, ch) = static_cast<uint8_t>(v);
  });
}

SynthImage render_synth_image(int64_t image_id, uint64_t seed, bool mounting,
                              const SynthOptions& opt) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  SynthImage out;
  out.mounting = mounting;
  out.info = {image_id, "synth_" + std::to_string(image_id) + ".pgm", opt.width, opt.height};

  const double base_len = std::min(opt.width, opt.height) * (mounting ? 0.32 : 0.42);
  const double margin = 2.0;
  for (int attempt = 0;; ++attempt) {
    out.figures.clear();
    const int facing = u01(rng) < 0.5 ? 1 : -1;
    Pose p{};
    p.length = base_len * (0.8 + 0.4 * u01(rng));
    p.facing = facing;
    if (!mounting) {
      p.cx = opt.width * (0.3 + 0.4 * u01(rng));
      p.cy = opt.height * (0.35 + 0.2 * u01(rng));
      p.tilt = 0.15 * (2 * u01(rng) - 1);
      out.figures.push_back(build_figure(p, rng));
    } else {
      p.cx = opt.width * 0.5 + facing * opt.width * (0.02 + 0.08 * u01(rng));
      p.cy = opt.height * (0.5 + 0.1 * u01(rng));
      p.tilt = 0.1 * (2 * u01(rng) - 1);
      const Figure lower = build_figure(p, rng);
      Pose q{};
      q.length = p.length * (0.9 + 0.2 * u01(rng));
      q.facing = facing;
      q.tilt = 0.45 + 0.3 * u01(rng);
      q.lifted_front = true;
      // Mounting animal stands behind, its chest over the lower animal's rump.
      const auto& rump = lower.joints[3];
      q.cx = rump[0] - facing * 0.35 * q.length;
      q.cy = rump[1] + 0.05 * q.length;
      out.figures.push_back(lower);
      out.figures.push_back(build_figure(q, rng));
    }
    bool ok = true;
    for (const auto& f : out.figures) ok = ok && fits(f, opt.width, opt.height, margin);
    if (ok) break;
    if (attempt > 200) {
      // Shrink until it fits; the loop above almost always succeeds first.
      for (auto& f : out.figures) {
        for (auto& j : f.joints) {
          j[0] = std::clamp(j[0], margin, opt.width - 1 - margin);
          j[1] = std::clamp(j[1], margin, opt.height - 1 - margin);
        }
      }
      break;
    }
  }

  Image img = Image::blank(opt.width, opt.height, 1);
  const int base = std::uniform_int_distribution<int>(40, 90)(rng);
  const double gx = 20.0 * (2 * u01(rng) - 1), gy = 20.0 * (2 * u01(rng) - 1);
  for (int y = 0; y < opt.height; ++y) {
    for (int x = 0; x < opt.width; ++x) {
      const double v = base + gx * x / opt.width + gy * y / opt.height;
      img.at(x, y) = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  for (const auto& f : out.figures) paint_figure(img, f);
  std::normal_distribution<double> noise(0.0, opt.noise_sigma);
  for (auto& px : img.pixels) {
    px = static_cast<uint8_t>(std::clamp(std::lround(px + noise(rng)), 0L, 255L));
  }
  out.image = std::move(img);

  for (size_t i = 0; i < out.figures.size(); ++i) {
    KeypointInstance inst = make_instance(out.figures[i], opt.width, opt.height);
    inst.image_id = image_id;
    for (size_t later = i + 1; later < out.figures.size(); ++later) {
      const auto mask = figure_mask(out.figures[later], opt.width, opt.height);
      for (auto& k : inst.keypoints) {
        const long px = std::lround(k.x), py = std::lround(k.y);
        if (mask[static_cast<size_t>(py) * opt.width + static_cast<size_t>(px)]) k.v = 1;
      }
    }
    for (auto& k : inst.keypoints) {
      if (u01(rng) < opt.unlabeled_probability) k = {0.0, 0.0, 0};
    }
    out.instances.push_back(inst);
  }
  return out;
}

SynthDataset synth_dataset(int n_instances, uint64_t seed, const SynthOptions& opt) {
  if (n_instances < 1) throw DatasetError("synthetic dataset needs at least one instance");
  SynthDataset data;
  data.annotations = make_dataset_header(SkeletonSpec::cattle());
  int64_t next_id = 1;
  for (int64_t i = 0; static_cast<int>(data.annotations.instances.size()) < n_instances; ++i) {
    const uint64_t s = derive_seed(seed, static_cast<uint64_t>(i));
    const int remaining = n_instances - static_cast<int>(data.annotations.instances.size());
    const bool mounting =
        remaining >= 2 && static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53 < opt.mounting_probability;
    SynthImage img = render_synth_image(i + 1, s, mounting, opt);
    data.annotations.images.push_back(img.info);
    for (auto& inst : img.instances) {
      inst.id = next_id++;
      data.annotations.instances.push_back(inst);
    }
    data.images.push_back(std::move(img.image));
  }
  return data;
}

void write_dataset_dir(const std::string& dir, const SynthDataset& data) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");
  save_annotations((fs::path(dir) / "annotations.json").string(), data.annotations);
  for (size_t i = 0; i < data.images.size(); ++i) {
    write_pnm((fs::path(dir) / "images" / data.annotations.images[i].file_name).string(), data.images[i]);
  }
}

Image load_dataset_image(const std::string& image_dir, const ImageInfo& info) {
  const Image img = read_pnm((std::filesystem::path(image_dir) / info.file_name).string());
  if (img.width != info.width || img.height != info.height) {
    throw DatasetError("image " + info.file_name + " is " + std::to_string(img.width) + "x" +
                       std::to_string(img.height) + ", annotations say " + std::to_string(info.width) +
                       "x" + std::to_string(info.height));
  }
  return img;
}

}  // namespace cattlepose
