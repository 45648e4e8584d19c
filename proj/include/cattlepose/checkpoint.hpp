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

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cattlepose/tensor.hpp"

namespace cattlepose {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary checkpoint layout (all integers little-endian):
//   "FSMCPOSE"            8-byte magic
//   u32 version           currently 1
//   u32 tensor count
//   per tensor: u16 name length, UTF-8 name bytes, u8 rank,
//               rank x u32 extents, numel x f32 (IEEE-754, little-endian)
inline constexpr char kCheckpointMagic[8] = {'F', 'S', 'M', 'C', 'P', 'O', 'S', 'E'};
inline constexpr uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out, const NamedTensors& tensors);
NamedTensors read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::string& path);

// Total number of scalars stored across all entries.
int64_t checkpoint_scalar_count(const NamedTensors& tensors);

}  // namespace cattlepose
