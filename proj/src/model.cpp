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

#include "cattlepose/model.hpp"

#include "cattlepose/checkpoint.hpp"

namespace cattlepose {

PoseModel::PoseModel(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  backbone_ = make_backbone(store_, cfg_, rng);
  if (cfg_.use_sc2head) head_ = make_sc2head(store_, buffers_, "head.sc2", cfg_.head, rng);
  simcc_ = make_simcc(store_, "head.simcc", cfg_.head, cfg_.feature_height(), cfg_.feature_width(), rng);
}

Tensor PoseModel::features(const Tensor& images, NormMode mode) const {
  Tensor f = backbone_forward(images, cfg_, backbone_);
  if (head_) f = sc2head_features(f, *head_, mode);
  return f;
}

SimccLogits PoseModel::forward(const Tensor& images, NormMode mode) const {
  return simcc_project(features(images, mode), cfg_.head, simcc_);
}

std::string PoseModel::buffers_path(const std::string& checkpoint_path) {
  const std::string ext = ".ckpt";
  if (checkpoint_path.size() > ext.size() &&
      checkpoint_path.compare(checkpoint_path.size() - ext.size(), ext.size(), ext) == 0) {
    return checkpoint_path.substr(0, checkpoint_path.size() - ext.size()) + ".buffers.ckpt";
  }
  return checkpoint_path + ".buffers";
}

void PoseModel::save(const std::string& path) const {
  save_checkpoint(path, store_.entries());
  save_checkpoint(buffers_path(path), buffers_.to_tensors());
}

void PoseModel::load(const std::string& path) {
  store_.load(load_checkpoint(path));
  buffers_.load(load_checkpoint(buffers_path(path)));
}

}  // namespace cattlepose
