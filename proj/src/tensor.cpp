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

#include "cattlepose/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace cattlepose {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<float>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0f);
  return grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0f, requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  const int64_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<float>(static_cast<size_t>(n), value),
                   requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor data");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->op = "leaf";
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value) { return from_data({1}, {value}); }

Tensor Tensor::make_result(const char* op, Shape shape, std::vector<float> data,
                           std::vector<Tensor> inputs,
                           std::function<void(detail::Node&)> backward) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError(std::string(op) + ": result length does not match " + shape_str(shape));
  }
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled && backward) {
    for (const Tensor& t : inputs) {
      if (t.defined() && t.requires_grad()) needs = true;
    }
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (Tensor& t : inputs) node->inputs.push_back(t.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->shape;
}

int64_t Tensor::dim(int axis) const {
  const Shape& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[static_cast<size_t>(axis)];
}

int64_t Tensor::numel() const { return static_cast<int64_t>(vec().size()); }

std::span<const float> Tensor::data() const { return vec(); }

std::span<float> Tensor::mutable_data() {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->data;
}

const std::vector<float>& Tensor::vec() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->data;
}

float Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

float Tensor::at(std::initializer_list<int64_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank mismatch for " + shape_str(s));
  int64_t off = 0;
  size_t i = 0;
  for (int64_t v : index) {
    if (v < 0 || v >= s[i]) throw ShapeError("index out of range for " + shape_str(s));
    off = off * s[i] + v;
    ++i;
  }
  return node_->data[static_cast<size_t>(off)];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  if (node_->backward) throw std::logic_error("requires_grad can only be set on leaf tensors");
  node_->requires_grad = value;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const float> Tensor::grad() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

void Tensor::backward() const {
  if (numel() != 1) throw ShapeError("backward() requires a single-element tensor");
  if (!node_->requires_grad) throw std::logic_error("backward() on a tensor without tape");

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && child->backward && !seen.count(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->grad.empty()) continue;
    n->backward(*n);
  }
  // Interior gradients are transient; only leaves keep them.
  for (detail::Node* n : order) {
    if (n != node_.get()) std::vector<float>().swap(n->grad);
  }
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape();
  node->data = node_->data;
  node->op = "detach";
  return Tensor(std::move(node));
}

}  // namespace cattlepose
