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
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cattlepose/image.hpp"
#include "cattlepose/tensor.hpp"

namespace cattlepose {

inline constexpr int kNumKeypoints = 16;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keypoint order used throughout the library and in annotation files:
//   0 head_top        1 neck            2 spine_mid       3 tail_root
//   4 l_front_shoulder 5 l_front_elbow  6 l_front_hoof
//   7 r_front_shoulder 8 r_front_elbow  9 r_front_hoof
//  10 l_hind_hip      11 l_hind_knee    12 l_hind_hoof
//  13 r_hind_hip      14 r_hind_knee    15 r_hind_hoof
struct SkeletonSpec {
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> edges;  // limb connectivity, for rendering
  std::vector<double> sigmas;              // per-keypoint OKS falloff k_i

  static SkeletonSpec cattle();
  int size() const { return static_cast<int>(names.size()); }
  int index_of(const std::string& name) const;  // -1 when absent
  void validate() const;

  // Overrides sigmas from "name = value" lines ('#' comments allowed).
  void load_sigmas(const std::string& text);
};

inline constexpr double kDefaultKeypointSigma = 0.05;

struct Keypoint {
  double x = 0, y = 0;
  int v = 0;  // 0 invisible / unlabeled, 1 partially visible, 2 visible
};

struct BBox {
  double x = 0, y = 0, w = 0, h = 0;
};

struct KeypointInstance {
  int64_t id = 0;
  int64_t image_id = 0;
  int64_t category_id = 1;
  BBox bbox;
  std::array<Keypoint, kNumKeypoints> keypoints{};
  std::optional<double> area;  // annotation "area" field when present

  int num_visible() const;
  // Object scale s^2 for OKS: the annotation area, else bbox w * h.
  double scale_area() const;
};

struct ImageInfo {
  int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct Category {
  int64_t id = 1;
  std::string name = "cattle";
  std::vector<std::string> keypoints;
  std::vector<std::pair<int, int>> skeleton;  // 1-based, as in COCO files
};

struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<KeypointInstance> instances;
  std::vector<Category> categories;

  const ImageInfo& image(int64_t id) const;
  bool has_image(int64_t id) const;
};

// COCO keypoint subset. Retained fields:
//   images[]:      id, file_name, width, height
//   annotations[]: id, image_id, category_id, bbox[4], keypoints[48], area (optional)
//   categories[]:  id, name, keypoints[16] (optional), skeleton (optional)
// Other fields are ignored. num_keypoints is recomputed on output.
Dataset parse_annotations(const std::string& json_text);
std::string serialize_annotations(const Dataset& dataset);
Dataset load_annotations(const std::string& path);
void save_annotations(const std::string& path, const Dataset& dataset);

Dataset make_dataset_header(const SkeletonSpec& skeleton);

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);
Split parse_split(const std::string& name);

using SplitAssignment = std::map<int64_t, Split>;  // image id -> split

// Image-level shuffled partition. Split sizes use largest remainders on
// ratios normalized to sum 1 (ties favour train, then val).
SplitAssignment split_dataset(const Dataset& dataset, std::array<double, 3> ratios, uint64_t seed);
std::string format_split_file(const SplitAssignment& split);  // "image_id<TAB>split" lines
SplitAssignment parse_split_file(const std::string& text);

struct VisibilityRow {
  std::string split;
  std::array<int64_t, 3> counts{};  // v = 0, 1, 2
  int64_t total = 0;
  double percent(int v) const;  // 0..100
};

struct VisibilityStats {
  std::vector<VisibilityRow> rows;
};

// Without a split assignment a single "all" row is produced.
VisibilityStats visibility_stats(const Dataset& dataset, const SplitAssignment* split = nullptr);
// "52,965 (81.35%)" cells, one line per split.
std::string format_visibility_table(const VisibilityStats& stats);
std::string format_count(int64_t n);  // thousands separators
std::string format_percent(double pct);  // two decimals and '%'

// ImageNet channel statistics applied to [0, 1] intensities.
inline constexpr std::array<float, 3> kPixelMean = {0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kPixelStd = {0.229f, 0.224f, 0.225f};

struct CropSpec {
  int width = 256;
  int height = 192;
  double padding = 1.25;  // box enlargement before the aspect fix
};

struct CropResult {
  Tensor image;       // [3, height, width], normalized
  Affine2 to_crop;    // image frame -> crop frame
  Affine2 to_image;   // crop frame -> image frame
};

// Affine taking the padded, aspect-corrected box onto the crop raster. The
// box centre (x + (w - 1) / 2, y + (h - 1) / 2) lands on the crop centre.
Affine2 crop_transform(const BBox& box, const CropSpec& spec);
CropResult crop_and_normalize(const Image& image, const BBox& box, const CropSpec& spec = {});
KeypointInstance transform_instance(const KeypointInstance& inst, const Affine2& map);

struct AugmentPolicy {
  double scale = 0.25;       // factor drawn from [1 - scale, 1 + scale]
  double rotation_deg = 30;  // angle drawn from [-r, r]
  double shift = 0.10;       // per-axis shift as a fraction of bbox w / h
  int occlusion_patches = 1;  // patch count drawn from [0, n]
  double occlusion_size = 0.3;  // max patch side as a fraction of bbox side

  static AugmentPolicy identity() { return {0, 0, 0, 0, 0}; }
};

struct OcclusionPatch {
  int x = 0, y = 0, w = 0, h = 0;
  uint8_t value = 0;
};

// One concrete draw; rotation/scale act about the bbox centre.
struct AugmentDraw {
  double scale = 1.0;
  double rotation_deg = 0.0;
  double shift_x = 0.0, shift_y = 0.0;  // pixels
  std::vector<OcclusionPatch> patches;

  Affine2 transform(const BBox& box) const;
};

struct Augmented {
  Image image;
  KeypointInstance instance;
  AugmentDraw draw;
  int attempts = 0;  // draws tried; 0 when the identity fallback was used
};

// Applies a draw: warp pixels and keypoints by the same affine, then paint
// the occlusion patches. Keypoint visibility is left as annotated.
Augmented apply_augment(const Image& image, const KeypointInstance& inst, const AugmentDraw& draw);
// A draw is degenerate when a labeled keypoint leaves the image or the box
// collapses below one pixel. Degenerate draws are re-sampled up to 10 times,
// then the identity is used.
Augmented augment(const Image& image, const KeypointInstance& inst, uint64_t seed,
                  const AugmentPolicy& policy);

}  // namespace cattlepose
