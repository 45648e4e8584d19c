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

#include "cattlepose/head.hpp"

#include <algorithm>
#include <cmath>

namespace cattlepose {

namespace {

using detail::Node;

ChannelGateParams make_gate(ParamStore& store, BufferStore& buffers, const std::string& prefix,
                            int64_t c, int64_t hidden, Rng& rng) {
  ChannelGateParams g;
  g.reduce_w = store.add(prefix + ".reduce.weight", {hidden, c, 1, 1}, Init::kHeNormal, rng);
  g.reduce_b = store.add(prefix + ".reduce.bias", {hidden}, Init::kZeros, rng);
  g.bn_gamma = store.add(prefix + ".bn.gamma", {hidden}, Init::kOnes, rng);
  g.bn_beta = store.add(prefix + ".bn.beta", {hidden}, Init::kZeros, rng);
  g.bn_stats = buffers.add_batch_norm(prefix + ".bn", hidden);
  g.expand_w = store.add(prefix + ".expand.weight", {c, hidden, 1, 1}, Init::kHeNormal, rng);
  g.expand_b = store.add(prefix + ".expand.bias", {c}, Init::kZeros, rng);
  return g;
}

Tensor channel_gate(const Tensor& x, const ChannelGateParams& g, NormMode mode) {
  const int64_t c = x.dim(1), hidden = g.reduce_w.dim(0);
  Tensor h = conv2d(x, g.reduce_w, g.reduce_b, ConvSpec::pointwise(c, hidden));
  h = relu(batch_norm(h, g.bn_gamma, g.bn_beta, *g.bn_stats, mode));
  return sigmoid(conv2d(h, g.expand_w, g.expand_b, ConvSpec::pointwise(hidden, c)));
}

}  // namespace

SabParams make_sab(ParamStore& store, const std::string& prefix, Rng& rng) {
  SabParams p;
  p.conv_w = store.add(prefix + ".conv.weight", {1, 2, 3, 3}, Init::kHeNormal, rng);
  p.conv_b = store.add(prefix + ".conv.bias", {1}, Init::kZeros, rng);
  return p;
}

CabParams make_cab(ParamStore& store, BufferStore& buffers, const std::string& prefix,
                   int64_t c, int reduction, Rng& rng) {
  if (reduction < 1 || c % reduction != 0) {
    throw ConfigError("channel attention: " + std::to_string(c) +
                      " channels not divisible by reduction " + std::to_string(reduction));
  }
  CabParams p;
  p.cbl_w = store.add(prefix + ".cbl.weight", {2 * c, 2 * c, 1, 1}, Init::kHeNormal, rng);
  p.cbl_b = store.add(prefix + ".cbl.bias", {2 * c}, Init::kZeros, rng);
  p.cbl_gamma = store.add(prefix + ".cbl.bn.gamma", {2 * c}, Init::kOnes, rng);
  p.cbl_beta = store.add(prefix + ".cbl.bn.beta", {2 * c}, Init::kZeros, rng);
  p.cbl_stats = buffers.add_batch_norm(prefix + ".cbl.bn", 2 * c);
  p.avg_gate = make_gate(store, buffers, prefix + ".avg_gate", c, c / reduction, rng);
  p.max_gate = make_gate(store, buffers, prefix + ".max_gate", c, c / reduction, rng);
  return p;
}

ScbParams make_scb(ParamStore& store, const std::string& prefix, int64_t c, Rng& rng) {
  ScbParams p;
  p.conv_w = store.add(prefix + ".conv.weight", {c, 1, 3, 3}, Init::kHeNormal, rng);
  return p;
}

Sc2HeadParams make_sc2head(ParamStore& store, BufferStore& buffers, const std::string& prefix,
                           const HeadConfig& cfg, Rng& rng) {
  cfg.validate();
  const int64_t c = cfg.in_channels;
  Sc2HeadParams p;
  p.sab = make_sab(store, prefix + ".sab", rng);
  p.cab = make_cab(store, buffers, prefix + ".cab", c, cfg.reduction, rng);
  p.scb = make_scb(store, prefix + ".scb", c, rng);
  p.fuse_w = store.add(prefix + ".fuse.weight", {c, 2 * c, 1, 1}, Init::kHeNormal, rng);
  p.fuse_b = store.add(prefix + ".fuse.bias", {c}, Init::kZeros, rng);
  return p;
}

SimccParams make_simcc(ParamStore& store, const std::string& prefix, const HeadConfig& cfg,
                       int64_t feature_h, int64_t feature_w, Rng& rng) {
  cfg.validate();
  const int64_t k = cfg.num_keypoints, flat = feature_h * feature_w;
  SimccParams p;
  p.keypoint_w = store.add(prefix + ".keypoint.weight", {k, cfg.in_channels, 1, 1}, Init::kHeNormal, rng);
  p.keypoint_b = store.add(prefix + ".keypoint.bias", {k}, Init::kZeros, rng);
  p.x_w = store.add(prefix + ".x.weight", {cfg.x_bins(), flat}, Init::kSmallNormal, rng);
  p.x_b = store.add(prefix + ".x.bias", {cfg.x_bins()}, Init::kZeros, rng);
  p.y_w = store.add(prefix + ".y.weight", {cfg.y_bins(), flat}, Init::kSmallNormal, rng);
  p.y_b = store.add(prefix + ".y.bias", {cfg.y_bins()}, Init::kZeros, rng);
  return p;
}

Tensor sab(const Tensor& x, const SabParams& p) {
  const Tensor pooled = concat_channels({channel_pool(x, PoolKind::kAvg), channel_pool(x, PoolKind::kMax)});
  const Tensor attn = sigmoid(conv2d(pooled, p.conv_w, p.conv_b, ConvSpec::dense(2, 1, 3)));
  return mul(x, attn);
}

Tensor cab(const Tensor& x, const CabParams& p, NormMode mode) {
  const int64_t c = x.dim(1);
  if (p.avg_gate.expand_w.dim(0) != c) {
    throw ShapeError("channel attention built for " + std::to_string(p.avg_gate.expand_w.dim(0)) +
                     " channels, input has " + std::to_string(c));
  }
  const Tensor desc = concat_channels({global_pool(x, PoolKind::kAvg), global_pool(x, PoolKind::kMax)});
  Tensor mixed = conv2d(desc, p.cbl_w, p.cbl_b, ConvSpec::pointwise(2 * c, 2 * c));
  mixed = leaky_relu(batch_norm(mixed, p.cbl_gamma, p.cbl_beta, *p.cbl_stats, mode), kCblSlope);
  const Tensor g_avg = channel_gate(slice_channels(mixed, 0, c), p.avg_gate, mode);
  const Tensor g_max = channel_gate(slice_channels(mixed, c, 2 * c), p.max_gate, mode);
  return mul(mul(x, g_avg), g_max);
}

Tensor scb(const Tensor& x, const ScbParams& p) {
  const int64_t c = x.dim(1);
  const Tensor up = bilinear_upsample_x2(x);
  const Tensor conv = conv2d(up, p.conv_w, Tensor(), ConvSpec::depthwise(c, 3));
  return sigmoid(add(x, pool2d(conv, PoolKind::kAvg, 2, 2, 2, 2)));
}

Tensor sc2head_features(const Tensor& x, const Sc2HeadParams& p, NormMode mode) {
  const int64_t c = x.dim(1);
  const Tensor attended = concat_channels({sab(x, p.sab), cab(x, p.cab, mode)});
  const Tensor calib = scb(x, p.scb);
  const Tensor gated = mul(attended, concat_channels({calib, calib}));
  return add(conv2d(gated, p.fuse_w, p.fuse_b, ConvSpec::pointwise(2 * c, c)), x);
}

SimccLogits simcc_project(const Tensor& features, const HeadConfig& cfg, const SimccParams& p) {
  if (features.rank() != 4) throw ShapeError("simcc_project: expected NCHW features");
  const int64_t n = features.dim(0), k = cfg.num_keypoints;
  const int64_t flat = features.dim(2) * features.dim(3);
  if (cfg.x_bins() < 1 || cfg.y_bins() < 1) throw ConfigError("simcc bin counts must be >= 1");
  if (p.x_w.dim(1) != flat) {
    throw ShapeError("simcc_project: head expects " + std::to_string(p.x_w.dim(1)) +
                     " spatial positions, features have " + std::to_string(flat));
  }
  const Tensor kp = conv2d(features, p.keypoint_w, p.keypoint_b,
                           ConvSpec::pointwise(features.dim(1), k));
  const Tensor rows = reshape(kp, {n * k, flat});
  SimccLogits out;
  out.x = reshape(linear(rows, p.x_w, p.x_b), {n, k, cfg.x_bins()});
  out.y = reshape(linear(rows, p.y_w, p.y_b), {n, k, cfg.y_bins()});
  return out;
}

namespace {

struct AxisPeak {
  int64_t index = 0;
  double prob = 0.0;
};

AxisPeak axis_peak(const float* logits, int64_t bins) {
  AxisPeak pk;
  for (int64_t b = 1; b < bins; ++b)
    if (logits[b] > logits[pk.index]) pk.index = b;
  const double top = logits[pk.index];
  double z = 0.0;
  for (int64_t b = 0; b < bins; ++b) z += std::exp(static_cast<double>(logits[b]) - top);
  pk.prob = 1.0 / z;
  return pk;
}

}  // namespace

std::vector<KeypointPrediction> simcc_decode(const Tensor& x_logits, const Tensor& y_logits,
                                             const HeadConfig& cfg) {
  if (x_logits.rank() != 3 || y_logits.rank() != 3 || x_logits.dim(0) != y_logits.dim(0) ||
      x_logits.dim(1) != y_logits.dim(1)) {
    throw ShapeError("simcc_decode: logits must be [N,K,bins] with matching N and K");
  }
  const int64_t n = x_logits.dim(0), k = x_logits.dim(1);
  const int64_t wb = x_logits.dim(2), hb = y_logits.dim(2);
  std::vector<KeypointPrediction> out(static_cast<size_t>(n), KeypointPrediction(static_cast<size_t>(k)));
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      const AxisPeak px = axis_peak(x_logits.vec().data() + (i * k + j) * wb, wb);
      const AxisPeak py = axis_peak(y_logits.vec().data() + (i * k + j) * hb, hb);
      auto& kp = out[static_cast<size_t>(i)][static_cast<size_t>(j)];
      kp.x = static_cast<float>(static_cast<double>(px.index) / cfg.split_ratio);
      kp.y = static_cast<float>(static_cast<double>(py.index) / cfg.split_ratio);
      kp.score = static_cast<float>(std::sqrt(px.prob * py.prob));
    }
  }
  return out;
}

std::vector<float> simcc_target(double coord, int64_t bins, double split_ratio, double sigma_bins,
                                bool* clamped) {
  double mu = coord * split_ratio;
  const double hi = static_cast<double>(bins - 1);
  const bool out_of_range = !(mu >= 0.0 && mu <= hi);
  if (out_of_range) mu = std::clamp(std::isfinite(mu) ? mu : 0.0, 0.0, hi);
  if (clamped) *clamped = out_of_range;
  std::vector<double> w(static_cast<size_t>(bins));
  double total = 0.0;
  for (int64_t b = 0; b < bins; ++b) {
    const double d = static_cast<double>(b) - mu;
    w[static_cast<size_t>(b)] = std::exp(-d * d / (2.0 * sigma_bins * sigma_bins));
    total += w[static_cast<size_t>(b)];
  }
  std::vector<float> t(static_cast<size_t>(bins));
  for (size_t b = 0; b < t.size(); ++b) t[b] = static_cast<float>(w[b] / total);
  return t;
}

SimccLoss simcc_loss(const Tensor& x_logits, const Tensor& y_logits, const TargetBatch& targets,
                     const HeadConfig& cfg) {
  if (x_logits.rank() != 3 || y_logits.rank() != 3) throw ShapeError("simcc_loss: logits must be [N,K,bins]");
  const int64_t n = x_logits.dim(0), k = x_logits.dim(1);
  const int64_t wb = x_logits.dim(2), hb = y_logits.dim(2);
  if (static_cast<int64_t>(targets.size()) != n) {
    throw ShapeError("simcc_loss: " + std::to_string(targets.size()) + " targets for batch of " +
                     std::to_string(n));
  }
  SimccLoss result;
  // d loss / d logits, filled for visible keypoints.
  auto gx = std::make_shared<std::vector<float>>(x_logits.vec().size(), 0.0f);
  auto gy = std::make_shared<std::vector<float>>(y_logits.vec().size(), 0.0f);
  double ce_total = 0.0, h_total = 0.0;
  struct Row {
    const float* logits;
    int64_t bins;
    float* grad;
    std::vector<float> target;
  };
  std::vector<Row> rows;
  for (int64_t i = 0; i < n; ++i) {
    if (static_cast<int64_t>(targets[static_cast<size_t>(i)].size()) != k) {
      throw ShapeError("simcc_loss: target " + std::to_string(i) + " has the wrong keypoint count");
    }
    for (int64_t j = 0; j < k; ++j) {
      const KeypointTarget& t = targets[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (t.visibility <= 0) continue;
      ++result.visible;
      bool cx = false, cy = false;
      rows.push_back({x_logits.vec().data() + (i * k + j) * wb, wb, gx->data() + (i * k + j) * wb,
                      simcc_target(t.x, wb, cfg.split_ratio, cfg.target_sigma, &cx)});
      rows.push_back({y_logits.vec().data() + (i * k + j) * hb, hb, gy->data() + (i * k + j) * hb,
                      simcc_target(t.y, hb, cfg.split_ratio, cfg.target_sigma, &cy)});
      result.clamped += static_cast<int>(cx) + static_cast<int>(cy);
    }
  }
  const double inv_visible = result.visible > 0 ? 1.0 / result.visible : 0.0;
  for (Row& r : rows) {
    double top = r.logits[0];
    for (int64_t b = 1; b < r.bins; ++b) top = std::max(top, static_cast<double>(r.logits[b]));
    double z = 0.0;
    for (int64_t b = 0; b < r.bins; ++b) z += std::exp(r.logits[b] - top);
    const double log_z = top + std::log(z);
    for (int64_t b = 0; b < r.bins; ++b) {
      const double t = r.target[static_cast<size_t>(b)];
      const double logp = r.logits[b] - log_z;
      if (t > 0.0) {
        ce_total -= t * logp;
        h_total -= t * std::log(t);
      }
      r.grad[b] = static_cast<float>((std::exp(logp) - t) * inv_visible);
    }
  }
  result.cross_entropy = ce_total * inv_visible;
  result.target_entropy = h_total * inv_visible;
  const float value = static_cast<float>(result.cross_entropy - result.target_entropy);
  result.loss = Tensor::make_result("simcc_loss", {1}, {value}, {x_logits, y_logits},
                                    [gx, gy](Node& self) {
                                      const float g = self.grad[0];
                                      if (self.inputs[0]->requires_grad) {
                                        auto& dst = self.inputs[0]->ensure_grad();
                                        for (size_t i = 0; i < dst.size(); ++i) dst[i] += g * (*gx)[i];
                                      }
                                      if (self.inputs[1]->requires_grad) {
                                        auto& dst = self.inputs[1]->ensure_grad();
                                        for (size_t i = 0; i < dst.size(); ++i) dst[i] += g * (*gy)[i];
                                      }
                                    });
  return result;
}

}  // namespace cattlepose
