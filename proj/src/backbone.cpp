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

#include "cattlepose/backbone.hpp"

#include <algorithm>

#include "cattlepose/ops.hpp"

namespace cattlepose {

namespace {

void fill_zero(Tensor& t) {
  auto d = t.mutable_data();
  std::fill(d.begin(), d.end(), 0.0f);
}

}  // namespace

InvertedResidualParams make_inverted_residual(ParamStore& store, const std::string& prefix,
                                              const StageConfig& cfg, Rng& rng) {
  const int64_t hidden = cfg.in_channels * cfg.expansion;
  InvertedResidualParams p;
  p.expand_w = store.add(prefix + ".expand.weight", {hidden, cfg.in_channels, 1, 1}, Init::kHeNormal, rng);
  p.expand_b = store.add(prefix + ".expand.bias", {hidden}, Init::kZeros, rng);
  p.depthwise_w = store.add(prefix + ".depthwise.weight", {hidden, 1, 3, 3}, Init::kHeNormal, rng);
  p.depthwise_b = store.add(prefix + ".depthwise.bias", {hidden}, Init::kZeros, rng);
  p.project_w = store.add(prefix + ".project.weight", {cfg.out_channels, hidden, 1, 1}, Init::kHeNormal, rng);
  p.project_b = store.add(prefix + ".project.bias", {cfg.out_channels}, Init::kZeros, rng);
  return p;
}

SfeParams make_sfe(ParamStore& store, const std::string& prefix, int64_t c, Rng& rng) {
  SfeParams p;
  static const char* bands[4] = {"ll", "lh", "hl", "hh"};
  for (int b = 0; b < 4; ++b) {
    p.wavelet[static_cast<size_t>(b)] =
        store.add(prefix + ".wavelet." + bands[b], {c, 1, 3, 3}, Init::kHeNormal, rng);
  }
  p.fuse_w = store.add(prefix + ".fuse.weight", {c, c, 1, 1}, Init::kHeNormal, rng);
  p.fuse_b = store.add(prefix + ".fuse.bias", {c}, Init::kZeros, rng);
  p.refine_w = store.add(prefix + ".refine.weight", {c, c, 3, 3}, Init::kSmallNormal, rng);
  p.refine_b = store.add(prefix + ".refine.bias", {c}, Init::kZeros, rng);
  return p;
}

RaParams make_ra(ParamStore& store, const std::string& prefix, int64_t c, Rng& rng) {
  RaParams p;
  p.channel_bias = store.add(prefix + ".channel_bias", {c}, Init::kZeros, rng);
  for (size_t i = 0; i < 3; ++i) {
    const std::string name = prefix + ".branch" + std::to_string(kRaDilations[i]);
    p.branch_w[i] = store.add(name + ".weight", {c, 1, 3, 3}, Init::kHeNormal, rng);
    p.branch_b[i] = store.add(name + ".bias", {c}, Init::kZeros, rng);
  }
  p.norm_gamma = store.add(prefix + ".norm.gamma", {c}, Init::kOnes, rng);
  p.norm_beta = store.add(prefix + ".norm.beta", {c}, Init::kZeros, rng);
  return p;
}

BackboneParams make_backbone(ParamStore& store, const ModelConfig& cfg, Rng& rng) {
  BackboneParams p;
  p.stem.weight = store.add("backbone.stem.weight", {cfg.stem_channels, 3, 3, 3}, Init::kHeNormal, rng);
  p.stem.bias = store.add("backbone.stem.bias", {cfg.stem_channels}, Init::kZeros, rng);
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageConfig& s = cfg.stages[i];
    if (!cfg.stage_enabled(s)) continue;
    const std::string prefix = "backbone.stage" + std::to_string(i);
    p.stages.push_back(s);
    switch (s.kind) {
      case StageKind::kInvertedResidual:
        p.stage_params.emplace_back(make_inverted_residual(store, prefix, s, rng));
        break;
      case StageKind::kSfe:
        p.stage_params.emplace_back(make_sfe(store, prefix, s.in_channels, rng));
        break;
      case StageKind::kRa:
        p.stage_params.emplace_back(make_ra(store, prefix, s.in_channels, rng));
        break;
    }
  }
  return p;
}

Tensor inverted_residual(const Tensor& x, const InvertedResidualParams& p, const StageConfig& cfg) {
  const int64_t hidden = cfg.in_channels * cfg.expansion;
  Tensor h = hardswish(conv2d(x, p.expand_w, p.expand_b, ConvSpec::pointwise(cfg.in_channels, hidden)));
  h = hardswish(conv2d(h, p.depthwise_w, p.depthwise_b, ConvSpec::depthwise(hidden, 3, cfg.stride)));
  Tensor out = conv2d(h, p.project_w, p.project_b, ConvSpec::pointwise(hidden, cfg.out_channels));
  return cfg.has_residual() ? add(out, x) : out;
}

Tensor sfe_block(const Tensor& x, const SfeParams& p) {
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const bool odd = (h % 2) != 0 || (w % 2) != 0;
  Tensor wt;
  if (odd) {
    const Tensor padded = pad2d(x, {0, static_cast<int>(h % 2), 0, static_cast<int>(w % 2)},
                                PadMode::kReplicate);
    wt = crop2d(wtconv(padded, p.wavelet), 0, 0, h, w);
  } else {
    wt = wtconv(x, p.wavelet);
  }
  const Tensor smooth = gaussian_smooth(wt);
  const Tensor temp = conv2d(add(wt, smooth), p.fuse_w, p.fuse_b, ConvSpec::pointwise(c, c));
  return add(conv2d(mul(wt, temp), p.refine_w, p.refine_b, ConvSpec::dense(c, c, 3)), x);
}

Tensor ra_block(const Tensor& x, const RaParams& p) {
  const int64_t c = x.dim(1);
  const Tensor shifted = add(x, reshape(p.channel_bias, {1, c, 1, 1}));
  Tensor total;
  for (size_t i = 0; i < 3; ++i) {
    const Tensor branch = hardswish(
        conv2d(shifted, p.branch_w[i], p.branch_b[i], ConvSpec::depthwise(c, 3, 1, kRaDilations[i])));
    total = total.defined() ? add(total, branch) : branch;
  }
  return add(layer_norm_channels(total, p.norm_gamma, p.norm_beta), x);
}

Tensor stem_forward(const Tensor& image, const StemParams& p) {
  const int64_t out = p.weight.dim(0);
  return hardswish(conv2d(image, p.weight, p.bias, ConvSpec::dense(3, out, 3, 2)));
}

Tensor backbone_forward(const Tensor& image, const ModelConfig& cfg, const BackboneParams& params) {
  if (image.rank() != 4 || image.dim(1) != 3) {
    throw ShapeError("backbone: expected [N,3,H,W] image, got " + shape_str(image.shape()));
  }
  if (image.dim(2) != cfg.input_height || image.dim(3) != cfg.input_width) {
    throw ShapeError("backbone: image resolution " + std::to_string(image.dim(3)) + "x" +
                     std::to_string(image.dim(2)) + " (WxH) does not match configured " +
                     std::to_string(cfg.input_width) + "x" + std::to_string(cfg.input_height));
  }
  Tensor x = stem_forward(image, params.stem);
  for (size_t i = 0; i < params.stage_params.size(); ++i) {
    const StageConfig& s = params.stages[i];
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, InvertedResidualParams>) {
            x = inverted_residual(x, p, s);
          } else if constexpr (std::is_same_v<P, SfeParams>) {
            x = sfe_block(x, p);
          } else {
            x = ra_block(x, p);
          }
        },
        params.stage_params[i]);
  }
  return x;
}

void zero_final_projection(StageParams& params) {
  std::visit(
      [](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, InvertedResidualParams>) {
          fill_zero(p.project_w);
          fill_zero(p.project_b);
        } else if constexpr (std::is_same_v<P, SfeParams>) {
          fill_zero(p.refine_w);
          fill_zero(p.refine_b);
        } else {
          fill_zero(p.norm_gamma);
          fill_zero(p.norm_beta);
        }
      },
      params);
}

}  // namespace cattlepose
