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

#include <cmath>
#include <limits>
#include <random>

#include "../support/helpers.hpp"
#include "../support/reference.hpp"
#include "cattlepose/gradcheck.hpp"
#include "cattlepose/ops.hpp"
#include "cattlepose/parallel.hpp"

using namespace cattlepose;
using testutil::weighted_sum;

TEST_SUITE("tensor") {
  TEST_CASE("construction validates shape and values") {
    CHECK(shape_numel({2, 3, 4}) == 24);
    CHECK(shape_numel({}) == 1);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor::from_data({1}, {std::numeric_limits<float>::quiet_NaN()}), NumericError);
    CHECK_THROWS_AS(Tensor::from_data({1}, {std::numeric_limits<float>::infinity()}), NumericError);
    const Tensor t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK(t.at({1, 0}) == 3.0f);
    CHECK_THROWS_AS(t.at({2, 0}), ShapeError);
    CHECK_THROWS_AS(t.item(), ShapeError);
  }

  TEST_CASE("overflowing op raises NumericError") {
    const Tensor x = Tensor::full({2}, 1e30f);
    CHECK_THROWS_AS(scale(x, 1e30f), NumericError);
    CHECK_THROWS_AS(mul(x, x), NumericError);
  }

  TEST_CASE("backward of sum(x * x) is 2x") {
    const Tensor x = Tensor::from_data({3}, {1.5f, -2.0f, 0.25f}, true);
    sum(mul(x, x)).backward();
    CHECK(x.grad()[0] == 3.0f);
    CHECK(x.grad()[1] == -4.0f);
    CHECK(x.grad()[2] == 0.5f);
  }

  TEST_CASE("gradients accumulate over shared inputs") {
    const Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    const Tensor y = add(scale(x, 3.0f), mul(x, x));
    sum(y).backward();
    CHECK(x.grad()[0] == doctest::Approx(5.0));
    CHECK(x.grad()[1] == doctest::Approx(7.0));
  }

  TEST_CASE("no-grad guard suppresses the tape") {
    const Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      CHECK_FALSE(mul(x, x).requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(mul(x, x).requires_grad());
  }

  TEST_CASE("backward requires a scalar with a tape") {
    const Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    CHECK_THROWS_AS(mul(x, x).backward(), ShapeError);
    CHECK_THROWS_AS(Tensor::scalar(1.0f).backward(), std::logic_error);
  }

  TEST_CASE("detach drops the tape") {
    const Tensor x = Tensor::from_data({2}, {1.0f, 2.0f}, true);
    const Tensor d = mul(x, x).detach();
    CHECK_FALSE(d.requires_grad());
    CHECK(d.vec()[1] == 4.0f);
  }
}

TEST_SUITE("ops") {
  TEST_CASE("conv2d matches the nested-loop oracle") {
    std::mt19937_64 rng(11);
    struct Case {
      ConvSpec spec;
      Shape in;
    };
    std::vector<Case> cases;
    cases.push_back({ConvSpec::pointwise(3, 5), {2, 3, 5, 4}});
    cases.push_back({ConvSpec::dense(3, 4, 3, 2), {1, 3, 7, 6}});
    cases.push_back({ConvSpec::dense(2, 3, 3, 1), {1, 2, 5, 5}});
    cases.push_back({ConvSpec::depthwise(4, 3, 1, 3), {1, 4, 9, 8}});
    cases.push_back({ConvSpec::depthwise(4, 3, 2, 1), {2, 4, 7, 9}});
    cases.push_back({ConvSpec::depthwise(3, 5, 1, 1), {1, 3, 6, 6}});
    ConvSpec grouped = ConvSpec::dense(4, 6, 3, 1);
    grouped.groups = 2;
    cases.push_back({grouped, {1, 4, 5, 6}});
    ConvSpec odd = ConvSpec::dense(2, 2, 3, 1);
    odd.kernel_w = 1;
    odd.pad_w = 0;
    odd.stride_h = 2;
    cases.push_back({odd, {1, 2, 6, 5}});
    for (const Case& c : cases) {
      const Tensor x = ref::random_tensor(c.in, rng);
      const Tensor w = ref::random_tensor(c.spec.weight_shape(), rng);
      const Tensor b = ref::random_tensor({c.spec.out_channels}, rng);
      ref::Conv rc;
      rc.kh = c.spec.kernel_h;
      rc.kw = c.spec.kernel_w;
      rc.sh = c.spec.stride_h;
      rc.sw = c.spec.stride_w;
      rc.ph = c.spec.pad_h;
      rc.pw = c.spec.pad_w;
      rc.dh = c.spec.dilation_h;
      rc.dw = c.spec.dilation_w;
      rc.groups = c.spec.groups;
      const ref::T rb = ref::from(b);
      const ref::T expect = ref::conv2d(ref::from(x), ref::from(w), &rb, rc);
      CHECK(ref::max_abs_diff(expect, conv2d(x, w, b, c.spec)) < 1e-5);
      const ref::T nobias = ref::conv2d(ref::from(x), ref::from(w), nullptr, rc);
      CHECK(ref::max_abs_diff(nobias, conv2d(x, w, Tensor(), c.spec)) < 1e-5);
    }
  }

  TEST_CASE("conv2d rejects mismatched inputs") {
    const Tensor x = Tensor::zeros({1, 3, 4, 4});
    CHECK_THROWS_AS(conv2d(x, Tensor::zeros({2, 2, 1, 1}), Tensor(), ConvSpec::pointwise(3, 2)), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor::zeros({3, 4, 4}), Tensor::zeros({2, 3, 1, 1}), Tensor(), ConvSpec::pointwise(3, 2)),
                    ShapeError);
    ConvSpec bad = ConvSpec::dense(3, 4, 3);
    bad.groups = 2;
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("conv2d gradients") {
    std::mt19937_64 rng(12);
    const ConvSpec spec = ConvSpec::dense(2, 3, 3, 2);
    const Tensor x = ref::random_tensor({1, 2, 6, 5}, rng);
    const Tensor w = ref::random_tensor(spec.weight_shape(), rng);
    const Tensor b = ref::random_tensor({3}, rng);
    const Shape out = {1, 3, 3, 3};
    auto fx = weighted_sum([&](const Tensor& t) { return conv2d(t, w, b, spec); }, out, 1);
    CHECK(grad_check(fx, x, 1e-2).max_relative_error < 5e-3);
    auto fw = weighted_sum([&](const Tensor& t) { return conv2d(x, t, b, spec); }, out, 2);
    CHECK(grad_check(fw, w, 1e-2).max_relative_error < 5e-3);
    auto fb = weighted_sum([&](const Tensor& t) { return conv2d(x, w, t, spec); }, out, 3);
    CHECK(grad_check(fb, b, 1e-2).max_relative_error < 5e-3);
    const ConvSpec dw = ConvSpec::depthwise(2, 3, 1, 3);
    const Tensor wd = ref::random_tensor(dw.weight_shape(), rng);
    auto fd = weighted_sum([&](const Tensor& t) { return conv2d(t, wd, Tensor(), dw); }, {1, 2, 6, 5}, 4);
    CHECK(grad_check(fd, x, 1e-2).max_relative_error < 5e-3);
  }

  TEST_CASE("conv2d output is identical across thread counts") {
    std::mt19937_64 rng(13);
    const ConvSpec spec = ConvSpec::dense(4, 8, 3, 1);
    const Tensor x = ref::random_tensor({2, 4, 12, 10}, rng);
    const Tensor w = ref::random_tensor(spec.weight_shape(), rng);
    const int before = num_threads();
    set_num_threads(1);
    const Tensor a = conv2d(x, w, Tensor(), spec);
    set_num_threads(3);
    const Tensor b = conv2d(x, w, Tensor(), spec);
    set_num_threads(before);
    CHECK(testutil::bit_equal(a, b));
  }

  TEST_CASE("activations match their closed forms") {
    const Tensor x = Tensor::from_data({7}, {-4.0f, -3.0f, -1.0f, 0.0f, 1.5f, 3.0f, 5.0f});
    const Tensor hs = hardswish(x), sg = sigmoid(x), rl = relu(x), lk = leaky_relu(x, 0.1f);
    for (int i = 0; i < 7; ++i) {
      const double v = x.vec()[static_cast<size_t>(i)];
      CHECK(hs.vec()[static_cast<size_t>(i)] == doctest::Approx(ref::hardswish(v)).epsilon(1e-6));
      CHECK(sg.vec()[static_cast<size_t>(i)] == doctest::Approx(ref::sigmoid(v)).epsilon(1e-6));
      CHECK(rl.vec()[static_cast<size_t>(i)] == doctest::Approx(ref::relu(v)));
      CHECK(lk.vec()[static_cast<size_t>(i)] == doctest::Approx(ref::leaky(v, 0.1)).epsilon(1e-6));
    }
    CHECK(hs.vec()[1] == 0.0f);
    CHECK(hs.vec()[5] == 3.0f);
    CHECK(sg.vec()[3] == 0.5f);
  }

  TEST_CASE("activation names parse") {
    CHECK(Activation::parse("hardswish").kind == ActivationKind::kHardSwish);
    CHECK(Activation::parse("relu").kind == ActivationKind::kRelu);
    CHECK(Activation::parse("sigmoid").kind == ActivationKind::kSigmoid);
    const Activation l = Activation::parse("leaky_relu:0.2");
    CHECK(l.kind == ActivationKind::kLeakyRelu);
    CHECK(l.slope == doctest::Approx(0.2));
    CHECK_THROWS(Activation::parse("gelu"));
    CHECK_THROWS(Activation::parse("leaky_relu:1.5"));
  }

  TEST_CASE("activation gradients away from kinks") {
    std::mt19937_64 rng(14);
    const Tensor x = testutil::spread_tensor({1, 2, 4, 4}, rng, -2.9, 2.9);
    for (int k = 0; k < 4; ++k) {
      auto f = weighted_sum(
          [k](const Tensor& t) {
            switch (k) {
              case 0: return hardswish(t);
              case 1: return sigmoid(t);
              case 2: return relu(t);
              default: return leaky_relu(t, 0.1f);
            }
          },
          x.shape(), 20 + static_cast<uint64_t>(k));
      CHECK(grad_check(f, x, 1e-2).max_relative_error < 5e-3);
    }
  }

  TEST_CASE("layer norm over channels matches the oracle") {
    std::mt19937_64 rng(15);
    const Tensor x = ref::random_tensor({2, 5, 3, 4}, rng, -2, 2);
    const Tensor g = ref::random_tensor({5}, rng), b = ref::random_tensor({5}, rng);
    const ref::T expect = ref::layer_norm(ref::from(x), ref::from(g), ref::from(b));
    CHECK(ref::max_abs_diff(expect, layer_norm_channels(x, g, b)) < 1e-5);
    auto f = weighted_sum([&](const Tensor& t) { return layer_norm_channels(t, g, b); }, x.shape(), 5);
    CHECK(grad_check(f, x, 1e-2).max_relative_error < 5e-3);
    auto fg = weighted_sum([&](const Tensor& t) { return layer_norm_channels(x, t, b); }, x.shape(), 6);
    CHECK(grad_check(fg, g, 1e-2).max_relative_error < 5e-3);
  }

  TEST_CASE("batch norm train and eval modes") {
    std::mt19937_64 rng(16);
    const Tensor x = ref::random_tensor({3, 4, 2, 3}, rng, -2, 2);
    const Tensor g = ref::random_tensor({4}, rng), b = ref::random_tensor({4}, rng);
    BatchNormStats stats;
    std::vector<double> m, v;
    ref::batch_stats(ref::from(x), m, v);
    const Tensor y = batch_norm(x, g, b, stats, NormMode::kTrain);
    CHECK(ref::max_abs_diff(ref::batch_norm(ref::from(x), ref::from(g), ref::from(b), m, v), y) < 1e-5);
    // The first update copies the batch statistics.
    for (size_t c = 0; c < 4; ++c) {
      CHECK(stats.mean[c] == doctest::Approx(m[c]).epsilon(1e-5));
    }
    const std::vector<float> mean1 = stats.mean;
    const Tensor x2 = ref::random_tensor({3, 4, 2, 3}, rng, -2, 2);
    batch_norm(x2, g, b, stats, NormMode::kTrain);
    std::vector<double> m2, v2;
    ref::batch_stats(ref::from(x2), m2, v2);
    for (size_t c = 0; c < 4; ++c) {
      CHECK(stats.mean[c] == doctest::Approx(0.9 * mean1[c] + 0.1 * m2[c]).epsilon(1e-5));
    }
    std::vector<double> rm(stats.mean.begin(), stats.mean.end()), rv(stats.var.begin(), stats.var.end());
    const Tensor ye = batch_norm(x, g, b, stats, NormMode::kEval);
    CHECK(ref::max_abs_diff(ref::batch_norm(ref::from(x), ref::from(g), ref::from(b), rm, rv), ye) < 1e-5);
    BatchNormStats empty;
    CHECK_THROWS(batch_norm(x, g, b, empty, NormMode::kEval));

    auto f = weighted_sum(
        [&](const Tensor& t) {
          BatchNormStats s;
          s.reset(4);
          return batch_norm(t, g, b, s, NormMode::kTrain);
        },
        x.shape(), 7);
    CHECK(grad_check(f, x, 1e-2).max_relative_error < 5e-3);
  }

  TEST_CASE("pooling") {
    const Tensor x = Tensor::from_data({1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 9});
    const Tensor a = pool2d(x, PoolKind::kAvg, 2, 2, 2, 2);
    CHECK(a.shape() == Shape{1, 1, 1, 2});
    CHECK(a.vec()[0] == 3.5f);
    CHECK(a.vec()[1] == 5.75f);
    const Tensor m = pool2d(x, PoolKind::kMax, 2, 2, 2, 2);
    CHECK(m.vec()[1] == 9.0f);
    CHECK(global_pool(x, PoolKind::kAvg).vec()[0] == doctest::Approx(37.0 / 8.0));
    CHECK(global_pool(x, PoolKind::kMax).vec()[0] == 9.0f);

    std::mt19937_64 rng(17);
    const Tensor y = testutil::spread_tensor({2, 3, 4, 4}, rng, -1, 1);
    const ref::T am = ref::channel_avg_max(ref::from(y));
    const Tensor cat = concat_channels({channel_pool(y, PoolKind::kAvg), channel_pool(y, PoolKind::kMax)});
    CHECK(ref::max_abs_diff(am, cat) < 1e-6);
    const ref::T gm = ref::global_avg_max(ref::from(y));
    const Tensor gcat = concat_channels({global_pool(y, PoolKind::kAvg), global_pool(y, PoolKind::kMax)});
    CHECK(ref::max_abs_diff(gm, gcat) < 1e-6);

    for (int k = 0; k < 4; ++k) {
      auto f = weighted_sum(
          [k](const Tensor& t) {
            switch (k) {
              case 0: return pool2d(t, PoolKind::kMax, 2, 2, 2, 2);
              case 1: return pool2d(t, PoolKind::kAvg, 2, 2, 2, 2);
              case 2: return channel_pool(t, PoolKind::kMax);
              default: return global_pool(t, PoolKind::kMax);
            }
          },
          k == 2 ? Shape{2, 1, 4, 4} : (k == 3 ? Shape{2, 3, 1, 1} : Shape{2, 3, 2, 2}), 30 + static_cast<uint64_t>(k));
      CHECK(grad_check(f, y, 1e-3).max_relative_error < 5e-3);
    }
  }

  TEST_CASE("bilinear x2 upsampling matches the oracle") {
    std::mt19937_64 rng(18);
    const Tensor x = ref::random_tensor({1, 2, 3, 5}, rng);
    CHECK(ref::max_abs_diff(ref::upsample2(ref::from(x)), bilinear_upsample_x2(x)) < 1e-6);
    auto f = weighted_sum([](const Tensor& t) { return bilinear_upsample_x2(t); }, {1, 2, 6, 10}, 8);
    CHECK(grad_check(f, x, 1e-2).max_relative_error < 5e-3);
    const Tensor c = Tensor::full({1, 1, 2, 2}, 4.0f);
    const Tensor up = bilinear_upsample_x2(c);
    for (float v : up.vec()) CHECK(v == 4.0f);
  }

  TEST_CASE("broadcasting elementwise ops") {
    const Tensor x = Tensor::from_data({1, 2, 1, 2}, {1, 2, 3, 4});
    const Tensor b = Tensor::from_data({1, 2, 1, 1}, {10, 20});
    const Tensor y = add(x, b);
    CHECK(y.vec() == std::vector<float>{11, 12, 23, 24});
    CHECK(sub(x, b).vec() == std::vector<float>{-9, -8, -17, -16});
    CHECK(mul(x, b).vec() == std::vector<float>{10, 20, 60, 80});
    CHECK_THROWS_AS(add(x, Tensor::zeros({1, 3, 1, 1})), ShapeError);
    const Tensor xg = Tensor::from_data({1, 2, 1, 2}, {1, 2, 3, 4}, true);
    const Tensor bg = Tensor::from_data({1, 2, 1, 1}, {10, 20}, true);
    sum(mul(xg, bg)).backward();
    CHECK(bg.grad()[0] == 3.0f);
    CHECK(bg.grad()[1] == 7.0f);
    CHECK(mean(x).item() == 2.5f);
  }

  TEST_CASE("concat, slice, reshape, pad and crop") {
    std::mt19937_64 rng(19);
    const Tensor a = ref::random_tensor({2, 2, 3, 3}, rng), b = ref::random_tensor({2, 3, 3, 3}, rng);
    const Tensor c = concat_channels({a, b});
    CHECK(c.shape() == Shape{2, 5, 3, 3});
    CHECK(testutil::bit_equal(slice_channels(c, 0, 2), a));
    CHECK(testutil::bit_equal(slice_channels(c, 2, 5), b));
    CHECK_THROWS_AS(reshape(a, {5, 7}), ShapeError);
    CHECK(reshape(a, {4, 9}).shape() == Shape{4, 9});

    const Tensor row = Tensor::from_data({1, 1, 1, 4}, {1, 2, 3, 4});
    CHECK(pad2d(row, {0, 0, 2, 2}, PadMode::kReflect).vec() == std::vector<float>{3, 2, 1, 2, 3, 4, 3, 2});
    CHECK(pad2d(row, {0, 0, 2, 1}, PadMode::kReplicate).vec() == std::vector<float>{1, 1, 1, 2, 3, 4, 4});
    CHECK(pad2d(row, {0, 0, 1, 1}, PadMode::kZero).vec() == std::vector<float>{0, 1, 2, 3, 4, 0});
    CHECK_THROWS(pad2d(row, {0, 0, 4, 0}, PadMode::kReflect));
    CHECK(crop2d(row, 0, 1, 1, 2).vec() == std::vector<float>{2, 3});

    const Tensor x = ref::random_tensor({1, 2, 4, 4}, rng);
    auto fp = weighted_sum([](const Tensor& t) { return pad2d(t, {2, 1, 2, 2}, PadMode::kReflect); }, {1, 2, 7, 8}, 9);
    CHECK(grad_check(fp, x, 1e-2).max_relative_error < 5e-3);
    auto fc = weighted_sum([&](const Tensor& t) { return slice_channels(concat_channels({t, t}), 1, 3); },
                           {1, 2, 4, 4}, 10);
    CHECK(grad_check(fc, x, 1e-2).max_relative_error < 5e-3);
  }

  TEST_CASE("linear matches the oracle") {
    std::mt19937_64 rng(20);
    const Tensor x = ref::random_tensor({3, 19}, rng), w = ref::random_tensor({5, 19}, rng), b = ref::random_tensor({5}, rng);
    const Tensor y = linear(x, w, b);
    for (int64_t i = 0; i < 3; ++i)
      for (int64_t o = 0; o < 5; ++o) {
        double s = b.vec()[static_cast<size_t>(o)];
        for (int64_t k = 0; k < 19; ++k) s += x.at({i, k}) * w.at({o, k});
        CHECK(y.at({i, o}) == doctest::Approx(s).epsilon(1e-5));
      }
    auto fx = weighted_sum([&](const Tensor& t) { return linear(t, w, b); }, {3, 5}, 11);
    CHECK(grad_check(fx, x, 1e-2).max_relative_error < 5e-3);
    auto fw = weighted_sum([&](const Tensor& t) { return linear(x, t, b); }, {3, 5}, 12);
    CHECK(grad_check(fw, w, 1e-2).max_relative_error < 5e-3);
    CHECK_THROWS_AS(linear(x, Tensor::zeros({5, 18}), Tensor()), ShapeError);
  }

  TEST_CASE("grad_check flags a wrong gradient") {
    // Forward is x^2 but the tape claims d/dx = x.
    auto wrong = [](const Tensor& x) {
      std::vector<float> d(x.vec().size());
      for (size_t i = 0; i < d.size(); ++i) d[i] = x.vec()[i] * x.vec()[i];
      const Tensor y = Tensor::make_result("bad_square", x.shape(), d, {x}, [](detail::Node& self) {
        auto& g = self.inputs[0]->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.inputs[0]->data[i];
      });
      return sum(y);
    };
    const Tensor x = Tensor::from_data({3}, {0.5f, 1.0f, -2.0f});
    CHECK(grad_check(wrong, x).max_relative_error > 0.4);
  }
}
