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
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cattlepose {

using Shape = std::vector<int64_t>;

// Raised when an operation receives tensors whose shapes do not fit its contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an operation produces NaN or Inf. A non-finite tensor is never
// handed back to the caller.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads self.grad and accumulates into inputs[i]->grad for inputs that
  // require a gradient.
  std::function<void(Node& self)> backward;

  std::vector<float>& ensure_grad();
};

}  // namespace detail

// Dense row-major float32 tensor with an optional reverse-mode tape.
//
// A Tensor is a cheap handle; copies share storage. Values produced by an
// operation are never mutated afterwards. Leaf tensors (parameters) may be
// updated in place through mutable_data() by an optimizer or initializer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value);

  // Builds an operation result. The backward closure is attached only when
  // gradient recording is enabled and at least one input requires a gradient.
  // Throws NumericError if `data` holds a non-finite value.
  static Tensor make_result(const char* op, Shape shape, std::vector<float> data,
                            std::vector<Tensor> inputs,
                            std::function<void(detail::Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t dim(int axis) const;
  int rank() const { return static_cast<int>(shape().size()); }
  int64_t numel() const;

  std::span<const float> data() const;
  std::span<float> mutable_data();
  const std::vector<float>& vec() const;
  float item() const;
  float at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const float> grad() const;
  void zero_grad();

  // Reverse-mode sweep from a single-element tensor.
  void backward() const;

  // Same values, no tape, no gradient requirement.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace cattlepose
