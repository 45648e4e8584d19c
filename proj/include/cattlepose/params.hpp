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
#include <map>
#include <memory>
#include <random>
#include <string>

#include "cattlepose/checkpoint.hpp"
#include "cattlepose/ops.hpp"
#include "cattlepose/tensor.hpp"

namespace cattlepose {

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent child seeds from (seed, stream).
uint64_t splitmix64(uint64_t x);
uint64_t derive_seed(uint64_t seed, uint64_t stream);

enum class Init {
  kZeros,
  kOnes,
  kHeNormal,   // N(0, 2 / fan_in), fan_in = numel / shape[0]
  kSmallNormal // N(0, 0.01^2)
};

// Ordered registry of learnable tensors. Names are unique; order is creation
// order and defines checkpoint layout.
class ParamStore {
 public:
  Tensor add(const std::string& name, Shape shape, Init init, Rng& rng);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const NamedTensors& entries() const { return entries_; }
  int64_t scalar_count() const;
  void zero_grad();

  // Copies values in by name. Every stored tensor must be present with the
  // same shape; unknown names are rejected.
  void load(const NamedTensors& values);

 private:
  NamedTensors entries_;
  std::map<std::string, size_t> index_;
};

// Non-learnable running statistics, serialized separately from parameters.
class BufferStore {
 public:
  std::shared_ptr<BatchNormStats> add_batch_norm(const std::string& name, int64_t channels);
  NamedTensors to_tensors() const;
  void load(const NamedTensors& values);

 private:
  std::vector<std::pair<std::string, std::shared_ptr<BatchNormStats>>> stats_;
};

}  // namespace cattlepose
