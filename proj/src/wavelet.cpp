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

#include "cattlepose/wavelet.hpp"

#include <cmath>
#include <stdexcept>

#include "cattlepose/ops.hpp"

namespace cattlepose {

namespace {

using detail::Node;

// Signs of (a, b, c, d) for each subband.
constexpr float kHaarSign[4][4] = {
    {1, 1, 1, 1},
    {1, 1, -1, -1},
    {1, -1, 1, -1},
    {1, -1, -1, 1},
};

Tensor haar_band(const Tensor& x, int band) {
  const int64_t NC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t OH = H / 2, OW = W / 2;
  std::vector<float> out(static_cast<size_t>(NC * OH * OW));
  const float* xp = x.vec().data();
  const float* s = kHaarSign[band];
  for (int64_t nc = 0; nc < NC; ++nc) {
    const float* in = xp + nc * H * W;
    for (int64_t y = 0; y < OH; ++y) {
      const float* r0 = in + 2 * y * W;
      const float* r1 = r0 + W;
      for (int64_t xx = 0; xx < OW; ++xx) {
        out[static_cast<size_t>((nc * OH + y) * OW + xx)] =
            0.5f * ((s[0] * r0[2 * xx] + s[1] * r0[2 * xx + 1]) +
                    (s[2] * r1[2 * xx] + s[3] * r1[2 * xx + 1]));
      }
    }
  }
  static const char* names[4] = {"haar_ll", "haar_lh", "haar_hl", "haar_hh"};
  return Tensor::make_result(
      names[band], {x.dim(0), x.dim(1), OH, OW}, std::move(out), {x}, [=](Node& self) {
        Node& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        auto& gx = xn.ensure_grad();
        for (int64_t nc = 0; nc < NC; ++nc) {
          float* g0 = gx.data() + nc * H * W;
          for (int64_t y = 0; y < OH; ++y) {
            float* r0 = g0 + 2 * y * W;
            float* r1 = r0 + W;
            for (int64_t xx = 0; xx < OW; ++xx) {
              const float g = 0.5f * self.grad[static_cast<size_t>((nc * OH + y) * OW + xx)];
              r0[2 * xx] += s[0] * g;
              r0[2 * xx + 1] += s[1] * g;
              r1[2 * xx] += s[2] * g;
              r1[2 * xx + 1] += s[3] * g;
            }
          }
        }
      });
}

}  // namespace

WaveletBands dwt2_haar(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("dwt2_haar: expected NCHW input, got " + shape_str(x.shape()));
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0 || x.dim(2) == 0 || x.dim(3) == 0) {
    throw ShapeError("dwt2_haar: spatial dims " + std::to_string(x.dim(2)) + "x" +
                     std::to_string(x.dim(3)) + " must be even and non-zero; pad the input first");
  }
  return {haar_band(x, 0), haar_band(x, 1), haar_band(x, 2), haar_band(x, 3)};
}

Tensor idwt2_haar(const WaveletBands& b) {
  const Shape& s = b.ll.shape();
  if (s.size() != 4 || b.lh.shape() != s || b.hl.shape() != s || b.hh.shape() != s) {
    throw ShapeError("idwt2_haar: subband shapes differ: ll " + shape_str(s) + ", lh " +
                     shape_str(b.lh.shape()) + ", hl " + shape_str(b.hl.shape()) + ", hh " +
                     shape_str(b.hh.shape()));
  }
  const int64_t NC = s[0] * s[1], H = s[2], W = s[3];
  const int64_t OH = 2 * H, OW = 2 * W;
  std::vector<float> out(static_cast<size_t>(NC * OH * OW));
  const float* bp[4] = {b.ll.vec().data(), b.lh.vec().data(), b.hl.vec().data(), b.hh.vec().data()};
  for (int64_t nc = 0; nc < NC; ++nc) {
    for (int64_t y = 0; y < H; ++y) {
      for (int64_t x = 0; x < W; ++x) {
        const size_t i = static_cast<size_t>((nc * H + y) * W + x);
        const float v[4] = {bp[0][i], bp[1][i], bp[2][i], bp[3][i]};
        float* o0 = out.data() + nc * OH * OW + 2 * y * OW + 2 * x;
        float* o1 = o0 + OW;
        // Synthesis is the transpose of the (symmetric, orthogonal) analysis matrix.
        float px[4];
        for (int p = 0; p < 4; ++p) {
          px[p] = 0.5f * ((kHaarSign[0][p] * v[0] + kHaarSign[1][p] * v[1]) +
                          (kHaarSign[2][p] * v[2] + kHaarSign[3][p] * v[3]));
        }
        o0[0] = px[0];
        o0[1] = px[1];
        o1[0] = px[2];
        o1[1] = px[3];
      }
    }
  }
  return Tensor::make_result(
      "idwt2_haar", {s[0], s[1], OH, OW}, std::move(out), {b.ll, b.lh, b.hl, b.hh},
      [=](Node& self) {
        for (int band = 0; band < 4; ++band) {
          Node& bn = *self.inputs[static_cast<size_t>(band)];
          if (!bn.requires_grad) continue;
          auto& gb = bn.ensure_grad();
          const float* sg = kHaarSign[band];
          for (int64_t nc = 0; nc < NC; ++nc)
            for (int64_t y = 0; y < H; ++y)
              for (int64_t x = 0; x < W; ++x) {
                const float* g0 = self.grad.data() + nc * OH * OW + 2 * y * OW + 2 * x;
                const float* g1 = g0 + OW;
                gb[static_cast<size_t>((nc * H + y) * W + x)] +=
                    0.5f * ((sg[0] * g0[0] + sg[1] * g0[1]) + (sg[2] * g1[0] + sg[3] * g1[1]));
              }
        }
      });
}

Tensor wtconv(const Tensor& x, const SubbandKernels& kernels) {
  const WaveletBands bands = dwt2_haar(x);
  const ConvSpec spec = ConvSpec::depthwise(x.dim(1), 3);
  const Tensor none;
  return idwt2_haar({conv2d(bands.ll, kernels[0], none, spec), conv2d(bands.lh, kernels[1], none, spec),
                     conv2d(bands.hl, kernels[2], none, spec), conv2d(bands.hh, kernels[3], none, spec)});
}

GaussianKernel gaussian_kernel(int size, double sigma) {
  if (size <= 0 || size % 2 == 0) {
    throw std::invalid_argument("gaussian_kernel: size must be odd and positive, got " +
                                std::to_string(size));
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  GaussianKernel k;
  k.size = size;
  k.sigma = sigma;
  k.weights.resize(static_cast<size_t>(size * size));
  const int c = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double r2 = static_cast<double>((i - c) * (i - c) + (j - c) * (j - c));
      const double w = std::exp(-r2 / (2.0 * sigma * sigma));
      k.weights[static_cast<size_t>(i * size + j)] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Tensor gaussian_smooth(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("gaussian_smooth: expected NCHW input, got " + shape_str(x.shape()));
  if (x.dim(2) < 1 || x.dim(3) < 1) throw ShapeError("gaussian_smooth: spatial dims must be >= 1");
  static const GaussianKernel kernel = gaussian_kernel(5, 1.0);
  const int64_t C = x.dim(1);
  std::vector<float> w(static_cast<size_t>(C * 25));
  for (int64_t c = 0; c < C; ++c)
    for (int k = 0; k < 25; ++k) w[static_cast<size_t>(c * 25 + k)] = static_cast<float>(kernel.weights[static_cast<size_t>(k)]);
  ConvSpec spec = ConvSpec::depthwise(C, 5);
  spec.pad_h = spec.pad_w = 0;
  const Tensor padded = pad2d(x, {2, 2, 2, 2}, PadMode::kReflect);
  return conv2d(padded, Tensor::from_data({C, 1, 5, 5}, std::move(w)), Tensor(), spec);
}

}  // namespace cattlepose
