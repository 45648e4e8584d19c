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

#include <functional>
#include <vector>

#include "cattlepose/tensor.hpp"

namespace cattlepose {

struct GradCheckResult {
  double max_relative_error = 0.0;
  int64_t worst_index = -1;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Compares the reverse-mode gradient of a scalar function with central
// finite differences, element by element. The error of element i is
// |a_i - n_i| / max(|a_i|, |n_i|, abs_floor). The step actually taken is the
// float-rounded perturbation, and differences are formed in double.
//
// Throws NumericError if fn yields a non-finite value at any probe.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x,
                           double eps = 1e-3, double abs_floor = 1e-6);

// Same comparison, but the finite differences are taken on `reference`, a
// 64-bit evaluation of the same scalar function. Float32 central differences
// carry rounding noise near 1e-5 of the output scale, which swamps small
// gradient elements of composite blocks; a double oracle does not.
using ReferenceFn = std::function<double(const std::vector<double>&)>;
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x,
                           const ReferenceFn& reference, double eps = 1e-6, double abs_floor = 1e-6);

}  // namespace cattlepose
