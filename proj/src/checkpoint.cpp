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

#include "cattlepose/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace cattlepose {

namespace {

void put_u8(std::ostream& out, uint8_t v) { out.put(static_cast<char>(v)); }

void put_u16(std::ostream& out, uint16_t v) {
  put_u8(out, static_cast<uint8_t>(v & 0xff));
  put_u8(out, static_cast<uint8_t>(v >> 8));
}

void put_u32(std::ostream& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) put_u8(out, static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw CheckpointError("checkpoint truncated");
  return static_cast<uint8_t>(c);
}

uint16_t get_u16(std::istream& in) {
  const uint16_t lo = get_u8(in);
  const uint16_t hi = get_u8(in);
  return static_cast<uint16_t>(lo | (hi << 8));
}

uint32_t get_u32(std::istream& in) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(get_u8(in)) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const NamedTensors& tensors) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > std::numeric_limits<uint16_t>::max()) {
      throw CheckpointError("tensor name too long: " + name.substr(0, 32) + "...");
    }
    if (t.rank() > std::numeric_limits<uint8_t>::max()) throw CheckpointError("rank too large");
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u8(out, static_cast<uint8_t>(t.rank()));
    for (int64_t d : t.shape()) {
      if (d > std::numeric_limits<uint32_t>::max()) throw CheckpointError("extent too large");
      put_u32(out, static_cast<uint32_t>(d));
    }
    for (float v : t.vec()) put_u32(out, std::bit_cast<uint32_t>(v));
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

NamedTensors read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t count = get_u32(in);
  NamedTensors result;
  result.reserve(count);
  for (uint32_t k = 0; k < count; ++k) {
    const uint16_t len = get_u16(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (in.gcount() != len) throw CheckpointError("checkpoint truncated in tensor name");
    const uint8_t rank = get_u8(in);
    Shape shape(rank);
    for (auto& d : shape) d = get_u32(in);
    std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
    for (float& v : data) v = std::bit_cast<float>(get_u32(in));
    result.emplace_back(std::move(name), Tensor::from_data(std::move(shape), std::move(data)));
  }
  return result;
}

void save_checkpoint(const std::string& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  write_checkpoint(out, tensors);
}

NamedTensors load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

int64_t checkpoint_scalar_count(const NamedTensors& tensors) {
  int64_t n = 0;
  for (const auto& entry : tensors) n += entry.second.numel();
  return n;
}

}  // namespace cattlepose
