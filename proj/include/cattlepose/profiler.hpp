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
#include <string>
#include <vector>

#include "cattlepose/config.hpp"
#include "cattlepose/model.hpp"

namespace cattlepose {

// Per-layer cost rows for one image.
//
// Cost table (MACs per image):
//   conv       oH * oW * oC * (iC / groups) * kh * kw     (bias adds not counted)
//   linear     rows * in * out                            (rows = keypoint count)
//              1x1 convs on pooled [C,1,1] descriptors are linear rows with rows = 1
//   norm       1 per element (batch norm and layer norm)
//   act        1 per element for hardswish, sigmoid and leaky ReLU; 0 for ReLU
//   mul        1 per output element of a Hadamard product
//   resample   4 per output element of bilinear x2 upsampling
//   transform  0 MACs; Haar analysis + synthesis counted as 6 adds per element
// Pooling, residual additions and the channel bias shift count as 0.
// The fixed Gaussian is a depthwise 5x5 conv row with 0 params.
struct CostRow {
  std::string name;
  std::string kind;  // conv, linear, norm, act, mul, resample, transform, bias
  int64_t params = 0;
  int64_t macs = 0;
  int64_t adds = 0;
};

struct CostReport {
  int input_width = 0;
  int input_height = 0;
  std::vector<CostRow> rows;

  int64_t total_params() const;
  int64_t total_macs() const;
  int64_t total_adds() const;
  int64_t total_flops() const { return 2 * total_macs(); }
  // Sum over rows whose name starts with `prefix`.
  int64_t params_under(const std::string& prefix) const;
  int64_t macs_of_kind(const std::string& kind) const;

  std::string to_text() const;
  std::string to_json() const;
};

// Single-layer rows on an oh x ow output map.
CostRow conv_cost(const std::string& name, int64_t in_channels, int64_t out_channels, int kernel,
                  int64_t groups, int64_t oh, int64_t ow, bool bias);
CostRow linear_cost(const std::string& name, int64_t in, int64_t out, int64_t rows_per_image, bool bias = true);

// Rows for the model `cfg` describes, at its configured input resolution.
CostReport count_params(const ModelConfig& cfg);
CostReport count_params(const PoseModel& model);
// Rows at a requested resolution. The coordinate-classification layers are
// sized by the resolution, so the config is rebuilt at width x height.
CostReport count_macs(const ModelConfig& cfg, int width, int height);

// Closed-form parameter counts of single blocks.
int64_t sfe_block_params(int64_t channels);
int64_t ra_block_params(int64_t channels);
int64_t sc2head_params(int64_t channels, int reduction);

struct BenchOptions {
  int batch = 1;
  int warmup_iters = 2;
  int timed_iters = 10;
  int threads = 1;
  uint64_t seed = 0;
};

struct BenchReport {
  std::vector<double> latency_ms;  // one sample per timed iteration
  double fps_mean = 0;  // batch / mean latency
  double fps_p50 = 0;   // batch / median latency
  double fps_p95 = 0;   // batch / 95th-percentile latency (slow tail)
  double latency_mean_ms = 0;
  int batch = 1;
  int threads = 1;
  int warmup_iters = 0;
  uint64_t seed = 0;
  std::string config_hash;
  std::string cpu_model;
  int input_width = 0;
  int input_height = 0;

  std::string to_json() const;
  static BenchReport from_json(const std::string& text);
};

std::string cpu_model_name();

// Times end-to-end eval-mode forward passes on a fixed random batch.
BenchReport bench_inference(const PoseModel& model, const BenchOptions& options);

}  // namespace cattlepose
