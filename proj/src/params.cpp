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

#include "cattlepose/params.hpp"

#include <cmath>

#include "cattlepose/checkpoint.hpp"

namespace cattlepose {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

Tensor ParamStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
  if (index_.count(name)) throw std::logic_error("duplicate parameter name " + name);
  const int64_t n = shape_numel(shape);
  std::vector<float> data(static_cast<size_t>(n), 0.0f);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      std::fill(data.begin(), data.end(), 1.0f);
      break;
    case Init::kHeNormal: {
      const int64_t fan_in = shape.empty() || shape[0] == 0 ? 1 : n / shape[0];
      std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
      for (float& v : data) v = dist(rng);
      break;
    }
    case Init::kSmallNormal: {
      std::normal_distribution<float> dist(0.0f, 0.01f);
      for (float& v : data) v = dist(rng);
      break;
    }
  }
  Tensor t = Tensor::from_data(std::move(shape), std::move(data), true);
  index_[name] = entries_.size();
  entries_.emplace_back(name, t);
  return t;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return entries_[it->second].second;
}

int64_t ParamStore::scalar_count() const { return checkpoint_scalar_count(entries_); }

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParamStore::load(const NamedTensors& values) {
  std::map<std::string, const Tensor*> incoming;
  for (const auto& [name, t] : values) {
    if (!index_.count(name)) throw CheckpointError("checkpoint has unknown parameter " + name);
    incoming[name] = &t;
  }
  for (auto& [name, t] : entries_) {
    auto it = incoming.find(name);
    if (it == incoming.end()) throw CheckpointError("checkpoint lacks parameter " + name);
    if (it->second->shape() != t.shape()) {
      throw ShapeError("parameter " + name + " has shape " + shape_str(t.shape()) +
                       ", checkpoint holds " + shape_str(it->second->shape()));
    }
    auto dst = t.mutable_data();
    const auto& src = it->second->vec();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::shared_ptr<BatchNormStats> BufferStore::add_batch_norm(const std::string& name,
                                                            int64_t channels) {
  auto s = std::make_shared<BatchNormStats>();
  s->reset(channels);
  stats_.emplace_back(name, s);
  return s;
}

NamedTensors BufferStore::to_tensors() const {
  NamedTensors out;
  for (const auto& [name, s] : stats_) {
    const int64_t c = static_cast<int64_t>(s->mean.size());
    out.emplace_back(name + ".running_mean", Tensor::from_data({c}, s->mean));
    out.emplace_back(name + ".running_var", Tensor::from_data({c}, s->var));
  }
  return out;
}

void BufferStore::load(const NamedTensors& values) {
  std::map<std::string, const Tensor*> incoming;
  for (const auto& [name, t] : values) incoming[name] = &t;
  for (auto& [name, s] : stats_) {
    auto m = incoming.find(name + ".running_mean");
    auto v = incoming.find(name + ".running_var");
    if (m == incoming.end() || v == incoming.end()) {
      throw CheckpointError("buffer file lacks running statistics for " + name);
    }
    if (m->second->numel() != static_cast<int64_t>(s->mean.size()) ||
        v->second->numel() != static_cast<int64_t>(s->var.size())) {
      throw ShapeError("running statistics for " + name + " have the wrong channel count");
    }
    s->mean = m->second->vec();
    s->var = v->second->vec();
  }
}

}  // namespace cattlepose
