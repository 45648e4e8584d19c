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

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StageKind { kInvertedResidual, kSfe, kRa };

const char* stage_kind_name(StageKind kind);
StageKind parse_stage_kind(const std::string& name);

struct StageConfig {
  StageKind kind = StageKind::kInvertedResidual;
  int64_t in_channels = 16;
  int64_t out_channels = 16;
  int stride = 1;
  int expansion = 4;  // inverted residual only

  void validate() const;
  // Residual addition applies only at stride 1 with matching channel counts.
  bool has_residual() const { return stride == 1 && in_channels == out_channels; }
};

struct HeadConfig {
  int64_t in_channels = 64;
  int num_keypoints = 16;
  double split_ratio = 2.0;
  int reduction = 4;  // channel-attention bottleneck ratio
  int input_width = 256;
  int input_height = 192;
  double target_sigma = 6.0;  // Gaussian label width, in bins

  int64_t x_bins() const;
  int64_t y_bins() const;
  void validate() const;
};

// Declarative model description. Stages disabled by a toggle stay in the list
// and are skipped when the model is built, so the file records the ablation.
struct ModelConfig {
  int input_width = 256;
  int input_height = 192;
  int64_t stem_channels = 16;
  int output_stride = 8;
  int wavelet_levels = 1;
  bool use_sfe = true;
  bool use_ra = true;
  bool use_sc2head = true;
  std::vector<StageConfig> stages;
  HeadConfig head;

  // Reference desk layout: stem 3->16 s2, IR 16->24 s2, IR 24->32 s2,
  // SFE @32, IR 32->64 s1, RA @64. Output stride 8.
  static ModelConfig reference();

  std::vector<StageConfig> active_stages() const;
  bool stage_enabled(const StageConfig& s) const;
  int64_t feature_channels() const;
  int64_t feature_height() const;
  int64_t feature_width() const;

  // Checks channel chaining, strides and output stride. Also syncs head
  // in_channels and input resolution from the backbone fields.
  void validate();
};

// Key-value text format, one "key = value" per line, '#' comments.
// Keys: input_width, input_height, stem_channels, output_stride,
// wavelet_levels, use_sfe, use_ra, use_sc2head, num_keypoints,
// simcc_split_ratio, cab_reduction, target_sigma, and repeated
// "stage = <kind> <in> <out> <stride> [expansion]" lines in order.
ModelConfig parse_model_config(const std::string& text);
std::string serialize_model_config(const ModelConfig& cfg);
ModelConfig load_model_config(const std::string& path);
void save_model_config(const std::string& path, const ModelConfig& cfg);

// 64-bit FNV-1a of the serialized config, as 16 hex digits.
std::string config_hash(const ModelConfig& cfg);
uint64_t fnv1a64(const std::string& bytes);

}  // namespace cattlepose
