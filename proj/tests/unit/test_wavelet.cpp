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

#include <doctest.h>

#include <random>

#include "../support/helpers.hpp"
#include "../support/reference.hpp"
#include "cattlepose/gradcheck.hpp"
#include "cattlepose/wavelet.hpp"

using namespace cattlepose;
using testutil::weighted_sum;

TEST_SUITE("wavelet") {
  TEST_CASE("analysis matches the Haar matrix oracle") {
    std::mt19937_64 rng(1);
    const Tensor x = ref::random_tensor({2, 3, 6, 8}, rng);
    const WaveletBands b = dwt2_haar(x);
    const auto expect = ref::haar_analysis(ref::from(x));
    CHECK(ref::max_abs_diff(expect[0], b.ll) < 1e-6);
    CHECK(ref::max_abs_diff(expect[1], b.lh) < 1e-6);
    CHECK(ref::max_abs_diff(expect[2], b.hl) < 1e-6);
    CHECK(ref::max_abs_diff(expect[3], b.hh) < 1e-6);
  }

  TEST_CASE("hand-computed 2x2 block") {
    const Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
    const WaveletBands b = dwt2_haar(x);
    CHECK(b.ll.item() == 5.0f);
    CHECK(b.lh.item() == -2.0f);
    CHECK(b.hl.item() == -1.0f);
    CHECK(b.hh.item() == 0.0f);
  }

  TEST_CASE("synthesis inverts analysis and preserves energy") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_int_distribution<int> dim(1, 8);
      const Tensor x = ref::random_tensor({1, 2, 2 * dim(rng), 2 * dim(rng)}, rng, -5, 5);
      const WaveletBands b = dwt2_haar(x);
      const Tensor y = idwt2_haar(b);
      CHECK(ref::max_abs_diff(ref::from(x), y) < 1e-5);
      double ex = 0, eb = 0;
      for (float v : x.vec()) ex += double(v) * v;
      for (const Tensor* t : {&b.ll, &b.lh, &b.hl, &b.hh})
        for (float v : t->vec()) eb += double(v) * v;
      CHECK(eb == doctest::Approx(ex).epsilon(1e-5));
    }
  }

  TEST_CASE("odd extents are rejected") {
    CHECK_THROWS_AS(dwt2_haar(Tensor::zeros({1, 1, 3, 4})), ShapeError);
    CHECK_THROWS_AS(dwt2_haar(Tensor::zeros({1, 1, 4, 5})), ShapeError);
    WaveletBands b = dwt2_haar(Tensor::zeros({1, 1, 4, 4}));
    b.hh = Tensor::zeros({1, 1, 1, 2});
    CHECK_THROWS_AS(idwt2_haar(b), ShapeError);
  }

  TEST_CASE("wtconv matches the oracle composition") {
    std::mt19937_64 rng(3);
    const Tensor x = ref::random_tensor({1, 3, 8, 6}, rng);
    SubbandKernels k;
    std::array<ref::T, 4> rk;
    for (size_t i = 0; i < 4; ++i) {
      k[i] = ref::random_tensor({3, 1, 3, 3}, rng);
      rk[i] = ref::from(k[i]);
    }
    CHECK(ref::max_abs_diff(ref::wtconv(ref::from(x), rk), wtconv(x, k)) < 1e-5);
  }

  TEST_CASE("wtconv with identity kernels is the identity") {
    std::mt19937_64 rng(4);
    const Tensor x = ref::random_tensor({1, 2, 4, 6}, rng);
    SubbandKernels k;
    for (auto& t : k) {
      std::vector<float> d(18, 0.0f);
      d[4] = d[13] = 1.0f;
      t = Tensor::from_data({2, 1, 3, 3}, d);
    }
    CHECK(ref::max_abs_diff(ref::from(x), wtconv(x, k)) < 1e-6);
  }

  TEST_CASE("Gaussian kernel constants") {
    const GaussianKernel g = gaussian_kernel(5, 1.0);
    double total = 0;
    for (double w : g.weights) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    // Normalized exp(-(i^2 + j^2) / 2) over i, j in [-2, 2], evaluated to 30 digits.
    CHECK(g.at(2, 2) == doctest::Approx(0.162102821637126633949764313607).epsilon(1e-13));
    CHECK(g.at(2, 1) == doctest::Approx(0.0983203313488457649151039473881).epsilon(1e-13));
    CHECK(g.at(0, 0) == doctest::Approx(0.00296901674395049709855290994691).epsilon(1e-12));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        CHECK(g.at(i, j) == g.at(j, i));
        CHECK(g.at(i, j) == g.at(4 - i, j));
      }
    CHECK_THROWS(gaussian_kernel(4, 1.0));
    CHECK_THROWS(gaussian_kernel(5, 0.0));
  }

  TEST_CASE("Gaussian smoothing with reflect padding") {
    std::mt19937_64 rng(5);
    const Tensor x = ref::random_tensor({2, 2, 6, 7}, rng);
    CHECK(ref::max_abs_diff(ref::gaussian5(ref::from(x)), gaussian_smooth(x)) < 1e-6);
    const Tensor c = Tensor::full({1, 1, 4, 4}, 2.5f);
    const Tensor smooth = gaussian_smooth(c);
    for (float v : smooth.vec()) CHECK(v == doctest::Approx(2.5).epsilon(1e-6));
  }

  TEST_CASE("wavelet gradients") {
    std::mt19937_64 rng(6);
    const Tensor x = ref::random_tensor({1, 2, 4, 4}, rng);
    auto fd = weighted_sum([](const Tensor& t) { return dwt2_haar(t).hl; }, {1, 2, 2, 2}, 1);
    CHECK(grad_check(fd, x, 1e-2).max_relative_error < 5e-3);
    SubbandKernels k;
    for (auto& t : k) t = ref::random_tensor({2, 1, 3, 3}, rng);
    auto fw = weighted_sum([&](const Tensor& t) { return wtconv(t, k); }, x.shape(), 2);
    CHECK(grad_check(fw, x, 1e-2).max_relative_error < 5e-3);
    auto fk = weighted_sum(
        [&](const Tensor& t) {
          SubbandKernels kk = k;
          kk[2] = t;
          return wtconv(x, kk);
        },
        x.shape(), 3);
    CHECK(grad_check(fk, k[2], 1e-2).max_relative_error < 5e-3);
    auto fg = weighted_sum([](const Tensor& t) { return gaussian_smooth(t); }, x.shape(), 4);
    CHECK(grad_check(fg, x, 1e-2).max_relative_error < 5e-3);
  }
}
