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

#include <array>
#include <vector>

#include "cattlepose/tensor.hpp"

namespace cattlepose {

// One level of an orthonormal 2D Haar decomposition. For each 2x2 input block
// [[a, b], [c, d]]:
//   ll = (a + b + c + d) / 2     lh = (a + b - c - d) / 2
//   hl = (a - b + c - d) / 2     hh = (a - b - c + d) / 2
// lh responds to vertical change (horizontal edges), hl to horizontal change.
struct WaveletBands {
  Tensor ll, lh, hl, hh;
};

// Requires even H and W; odd inputs must be padded by the caller.
WaveletBands dwt2_haar(const Tensor& x);
Tensor idwt2_haar(const WaveletBands& bands);

// Depthwise 3x3 kernels, one [C,1,3,3] set per subband, in ll/lh/hl/hh order.
using SubbandKernels = std::array<Tensor, 4>;

// IWT(conv(W, WT(x))) with zero padding 1 inside each subband.
Tensor wtconv(const Tensor& x, const SubbandKernels& kernels);

struct GaussianKernel {
  int size = 5;
  double sigma = 1.0;
  std::vector<double> weights;  // row-major size x size, sums to 1

  double at(int row, int col) const { return weights[static_cast<size_t>(row * size + col)]; }
};

GaussianKernel gaussian_kernel(int size = 5, double sigma = 1.0);

// Fixed 5x5, sigma 1 smoothing of every channel with reflect padding.
// The kernel is a constant; only x receives a gradient.
Tensor gaussian_smooth(const Tensor& x);

}  // namespace cattlepose
