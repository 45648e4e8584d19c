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

#include "cattlepose/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cattlepose {

namespace {

double eval_scalar(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x) {
  NoGradGuard guard;
  const Tensor y = fn(x);
  if (y.numel() != 1) throw ShapeError("grad_check: function must return a single element");
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function returned a non-finite value");
  return v;
}

GradCheckResult analytic_gradient(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x) {
  GradCheckResult result;
  const Tensor leaf = Tensor::from_data(x.shape(), x.vec(), true);
  const Tensor y = fn(leaf);
  if (y.numel() != 1) throw ShapeError("grad_check: function must return a single element");
  if (!std::isfinite(y.item())) throw NumericError("grad_check: function returned a non-finite value");
  const size_t n = x.vec().size();
  result.analytic.assign(n, 0.0);
  if (y.requires_grad()) {
    y.backward();
    if (leaf.has_grad()) {
      for (size_t i = 0; i < n; ++i) result.analytic[i] = leaf.grad()[i];
    }
  }
  return result;
}

void score(GradCheckResult& result, double abs_floor) {
  for (size_t i = 0; i < result.analytic.size(); ++i) {
    const double a = result.analytic[i], num = result.numeric[i];
    const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), abs_floor});
    if (result.worst_index < 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = static_cast<int64_t>(i);
    }
  }
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x,
                           const ReferenceFn& reference, double eps, double abs_floor) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  GradCheckResult result = analytic_gradient(fn, x);
  std::vector<double> probe(x.vec().begin(), x.vec().end());
  result.numeric.resize(probe.size());
  for (size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = reference(probe);
    probe[i] = orig - eps;
    const double fm = reference(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("grad_check: reference returned a non-finite value");
    }
    result.numeric[i] = (fp - fm) / (2.0 * eps);
  }
  score(result, abs_floor);
  return result;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x,
                           double eps, double abs_floor) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  GradCheckResult result = analytic_gradient(fn, x);
  std::vector<float> probe = x.vec();
  result.numeric.resize(probe.size());
  for (size_t i = 0; i < probe.size(); ++i) {
    const float orig = probe[i];
    const float up = static_cast<float>(orig + eps);
    const float down = static_cast<float>(orig - eps);
    probe[i] = up;
    const double fp = eval_scalar(fn, Tensor::from_data(x.shape(), probe));
    probe[i] = down;
    const double fm = eval_scalar(fn, Tensor::from_data(x.shape(), probe));
    probe[i] = orig;
    result.numeric[i] = (fp - fm) / (static_cast<double>(up) - static_cast<double>(down));
  }
  score(result, abs_floor);
  return result;
}

}  // namespace cattlepose
