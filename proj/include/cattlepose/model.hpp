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
#include <optional>
#include <string>

#include "cattlepose/backbone.hpp"
#include "cattlepose/config.hpp"
#include "cattlepose/head.hpp"
#include "cattlepose/params.hpp"

namespace cattlepose {

// Backbone, optional SC2 head and coordinate-classification output layers,
// built from a ModelConfig with seeded initialization.
class PoseModel {
 public:
  PoseModel(ModelConfig cfg, uint64_t seed);
  PoseModel(const PoseModel&) = delete;
  PoseModel& operator=(const PoseModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  BufferStore& buffers() { return buffers_; }
  const BufferStore& buffers() const { return buffers_; }

  BackboneParams& backbone() { return backbone_; }
  std::optional<Sc2HeadParams>& sc2head() { return head_; }
  SimccParams& simcc() { return simcc_; }

  // Normalized images [N,3,H,W] -> head features [N,C,h,w].
  Tensor features(const Tensor& images, NormMode mode) const;
  SimccLogits forward(const Tensor& images, NormMode mode) const;

  // Parameters go to `path`; batch-norm running statistics to buffers_path(path).
  void save(const std::string& path) const;
  void load(const std::string& path);
  static std::string buffers_path(const std::string& checkpoint_path);

 private:
  ModelConfig cfg_;
  ParamStore store_;
  BufferStore buffers_;
  BackboneParams backbone_;
  std::optional<Sc2HeadParams> head_;
  SimccParams simcc_;
};

}  // namespace cattlepose
