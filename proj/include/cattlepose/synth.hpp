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
#include <cstdint>
#include <string>
#include <vector>

#include "cattlepose/dataset.hpp"
#include "cattlepose/image.hpp"

namespace cattlepose {

struct SynthOptions {
  int width = 320;
  int height = 240;
  double mounting_probability = 0.5;  // chance an image holds a mounting pair
  double noise_sigma = 8.0;
  double unlabeled_probability = 0.02;  // keypoints emitted as v = 0 at (0, 0)
};

// Stick-figure quadruped: capsules for torso, neck/head and the four legs.
struct Figure {
  std::array<std::array<double, 2>, kNumKeypoints> joints{};
  double length = 0;  // tail_root -> neck distance
  uint8_t shade = 180;
};

// Pixels covered when the figure is painted (1 = covered), row-major w x h.
std::vector<uint8_t> figure_mask(const Figure& fig, int width, int height);
void paint_figure(Image& image, const Figure& fig);

struct SynthImage {
  ImageInfo info;
  Image image;
  bool mounting = false;
  // Paint order: figures[1] (the mounting animal) is drawn over figures[0].
  std::vector<Figure> figures;
  std::vector<KeypointInstance> instances;
};

// One image. Keypoints of an earlier figure covered by a later figure's mask
// are labeled v = 1; others v = 2, except random unlabeled ones (v = 0).
SynthImage render_synth_image(int64_t image_id, uint64_t seed, bool mounting,
                              const SynthOptions& options = {});

struct SynthDataset {
  Dataset annotations;
  std::vector<Image> images;  // aligned with annotations.images
};

// Generates images until `n_instances` animals exist. Image i uses seed
// derive_seed(seed, i); annotation ids are 1-based in generation order.
SynthDataset synth_dataset(int n_instances, uint64_t seed, const SynthOptions& options = {});

// Writes annotations.json and images/<file_name> under `dir`.
void write_dataset_dir(const std::string& dir, const SynthDataset& data);
Image load_dataset_image(const std::string& image_dir, const ImageInfo& info);

}  // namespace cattlepose
