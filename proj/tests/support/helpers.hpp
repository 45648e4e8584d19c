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

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "cattlepose/ops.hpp"
#include "cattlepose/tensor.hpp"

namespace testutil {

using cattlepose::Tensor;

// Scalar probe sum(f(x) * r) with a fixed random r, so gradients of every
// output element contribute with distinct weights.
inline std::function<Tensor(const Tensor&)> weighted_sum(std::function<Tensor(const Tensor&)> f,
                                                         const cattlepose::Shape& out_shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int64_t n = 1;
  for (int64_t d : out_shape) n *= d;
  std::vector<float> r(static_cast<size_t>(n));
  for (float& v : r) v = static_cast<float>(u(rng));
  const Tensor weights = Tensor::from_data(out_shape, std::move(r));
  return [f = std::move(f), weights](const Tensor& x) { return cattlepose::sum(cattlepose::mul(f(x), weights)); };
}

// Uniform values in [lo, hi] that stay at least `gap` away from each other
// after sorting, so max-style selections are stable under small probes.
inline Tensor spread_tensor(const cattlepose::Shape& shape, std::mt19937_64& rng, double lo, double hi) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  std::vector<float> v(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) v[static_cast<size_t>(i)] = static_cast<float>(lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  std::shuffle(v.begin(), v.end(), rng);
  return Tensor::from_data(shape, std::move(v));
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (size_t i = 0; i < a.vec().size(); ++i) {
    if (a.vec()[i] != b.vec()[i]) return false;
  }
  return true;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cattlepose_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace testutil
