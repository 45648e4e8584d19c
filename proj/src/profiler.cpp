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

#include "cattlepose/profiler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cattlepose/parallel.hpp"

namespace cattlepose {

using json = nlohmann::json;

int64_t CostReport::total_params() const {
  int64_t s = 0;
  for (const auto& r : rows) s += r.params;
  return s;
}

int64_t CostReport::total_macs() const {
  int64_t s = 0;
  for (const auto& r : rows) s += r.macs;
  return s;
}

int64_t CostReport::total_adds() const {
  int64_t s = 0;
  for (const auto& r : rows) s += r.adds;
  return s;
}

int64_t CostReport::params_under(const std::string& prefix) const {
  int64_t s = 0;
  for (const auto& r : rows) {
    if (r.name.compare(0, prefix.size(), prefix) == 0) s += r.params;
  }
  return s;
}

int64_t CostReport::macs_of_kind(const std::string& kind) const {
  int64_t s = 0;
  for (const auto& r : rows) {
    if (r.kind == kind) s += r.macs;
  }
  return s;
}

CostRow conv_cost(const std::string& name, int64_t ic, int64_t oc, int k, int64_t groups, int64_t oh, int64_t ow,
                  bool bias) {
  if (groups < 1 || ic % groups != 0 || oc % groups != 0) throw std::invalid_argument("conv_cost: bad groups");
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv_cost: output extent must be static and positive");
  const int64_t taps = oc * (ic / groups) * k * k;
  return {name, "conv", taps + (bias ? oc : 0), oh * ow * taps, 0};
}

CostRow linear_cost(const std::string& name, int64_t in, int64_t out, int64_t rows_per_image, bool bias) {
  return {name, "linear", in * out + (bias ? out : 0), rows_per_image * in * out, 0};
}

namespace {

struct Builder {
  std::vector<CostRow> rows;

  // Output extent of a "same"-padded k x k conv at the given stride.
  static int64_t out_dim(int64_t in, int stride) { return (in - 1) / stride + 1; }

  void conv(const std::string& name, int64_t ic, int64_t oc, int k, int64_t groups, int64_t oh,
            int64_t ow, bool bias, bool learnable = true) {
    rows.push_back(conv_cost(name, ic, oc, k, groups, oh, ow, bias));
    if (!learnable) rows.back().params = 0;
  }
  void linear(const std::string& name, int64_t in, int64_t out, int64_t rows_per_image) {
    rows.push_back(linear_cost(name, in, out, rows_per_image));
  }
  // 1x1 conv applied to a pooled [C,1,1] descriptor, i.e. a dense layer.
  void descriptor(const std::string& name, int64_t in, int64_t out) {
    rows.push_back({name, "linear", in * out + out, in * out, 0});
  }
  void norm(const std::string& name, int64_t c, int64_t elems) {
    rows.push_back({name, "norm", 2 * c, elems, 0});
  }
  void act(const std::string& name, int64_t elems, bool counted = true) {
    rows.push_back({name, "act", 0, counted ? elems : 0, 0});
  }
  void mul(const std::string& name, int64_t elems) { rows.push_back({name, "mul", 0, elems, 0}); }
};

void add_inverted_residual(Builder& b, const std::string& p, const StageConfig& s, int64_t h, int64_t w) {
  const int64_t hidden = s.in_channels * s.expansion;
  const int64_t oh = Builder::out_dim(h, s.stride), ow = Builder::out_dim(w, s.stride);
  b.conv(p + ".expand", s.in_channels, hidden, 1, 1, h, w, true);
  b.act(p + ".expand.act", hidden * h * w);
  b.conv(p + ".depthwise", hidden, hidden, 3, hidden, oh, ow, true);
  b.act(p + ".depthwise.act", hidden * oh * ow);
  b.conv(p + ".project", hidden, s.out_channels, 1, 1, oh, ow, true);
}

void add_sfe(Builder& b, const std::string& p, int64_t c, int64_t h, int64_t w) {
  const int64_t ph = h + h % 2, pw = w + w % 2;
  b.rows.push_back({p + ".transform", "transform", 0, 0, 6 * c * ph * pw});
  for (const char* band : {"ll", "lh", "hl", "hh"}) {
    b.conv(p + ".wavelet." + band, c, c, 3, c, ph / 2, pw / 2, false);
  }
  b.conv(p + ".gaussian", c, c, 5, c, h, w, false, false);
  b.conv(p + ".fuse", c, c, 1, 1, h, w, true);
  b.mul(p + ".product", c * h * w);
  b.conv(p + ".refine", c, c, 3, 1, h, w, true);
}

void add_ra(Builder& b, const std::string& p, int64_t c, int64_t h, int64_t w) {
  b.rows.push_back({p + ".channel_bias", "bias", c, 0, 0});
  for (int d : kRaDilations) {
    const std::string name = p + ".branch" + std::to_string(d);
    b.conv(name, c, c, 3, c, h, w, true);
    b.act(name + ".act", c * h * w);
  }
  b.norm(p + ".norm", c, c * h * w);
}

void add_gate(Builder& b, const std::string& p, int64_t c, int64_t hidden) {
  b.descriptor(p + ".reduce", c, hidden);
  b.norm(p + ".bn", hidden, hidden);
  b.act(p + ".relu", hidden, false);
  b.descriptor(p + ".expand", hidden, c);
  b.act(p + ".sigmoid", c);
}

void add_sc2head(Builder& b, const std::string& p, int64_t c, int r, int64_t h, int64_t w) {
  b.conv(p + ".sab.conv", 2, 1, 3, 1, h, w, true);
  b.act(p + ".sab.sigmoid", h * w);
  b.mul(p + ".sab.scale", c * h * w);
  b.descriptor(p + ".cab.cbl", 2 * c, 2 * c);
  b.norm(p + ".cab.cbl.bn", 2 * c, 2 * c);
  b.act(p + ".cab.cbl.act", 2 * c);
  add_gate(b, p + ".cab.avg_gate", c, c / r);
  add_gate(b, p + ".cab.max_gate", c, c / r);
  b.mul(p + ".cab.scale", 2 * c * h * w);
  b.rows.push_back({p + ".scb.upsample", "resample", 0, 4 * c * 4 * h * w, 0});
  b.conv(p + ".scb.conv", c, c, 3, c, 2 * h, 2 * w, false);
  b.act(p + ".scb.sigmoid", c * h * w);
  b.mul(p + ".gate", 2 * c * h * w);
  b.conv(p + ".fuse", 2 * c, c, 1, 1, h, w, true);
}

}  // namespace

CostReport count_params(const ModelConfig& cfg) { return count_macs(cfg, cfg.input_width, cfg.input_height); }

CostReport count_params(const PoseModel& model) { return count_params(model.config()); }

CostReport count_macs(const ModelConfig& base, int width, int height) {
  ModelConfig cfg = base;
  cfg.input_width = width;
  cfg.input_height = height;
  cfg.validate();
  Builder b;
  int64_t h = Builder::out_dim(height, 2), w = Builder::out_dim(width, 2);
  b.conv("backbone.stem", 3, cfg.stem_channels, 3, 1, h, w, true);
  b.act("backbone.stem.act", cfg.stem_channels * h * w);
  for (size_t i = 0; i < cfg.stages.size(); ++i) {
    const StageConfig& s = cfg.stages[i];
    if (!cfg.stage_enabled(s)) continue;
    const std::string p = "backbone.stage" + std::to_string(i);
    switch (s.kind) {
      case StageKind::kInvertedResidual:
        add_inverted_residual(b, p, s, h, w);
        h = Builder::out_dim(h, s.stride);
        w = Builder::out_dim(w, s.stride);
        break;
      case StageKind::kSfe:
        add_sfe(b, p, s.in_channels, h, w);
        break;
      case StageKind::kRa:
        add_ra(b, p, s.in_channels, h, w);
        break;
    }
  }
  const HeadConfig& hc = cfg.head;
  if (cfg.use_sc2head) add_sc2head(b, "head.sc2", hc.in_channels, hc.reduction, h, w);
  b.conv("head.simcc.keypoint", hc.in_channels, hc.num_keypoints, 1, 1, h, w, true);
  b.linear("head.simcc.x", h * w, hc.x_bins(), hc.num_keypoints);
  b.linear("head.simcc.y", h * w, hc.y_bins(), hc.num_keypoints);
  CostReport rep;
  rep.input_width = width;
  rep.input_height = height;
  rep.rows = std::move(b.rows);
  return rep;
}

int64_t sfe_block_params(int64_t c) { return 4 * 9 * c + (c * c + c) + (9 * c * c + c); }

int64_t ra_block_params(int64_t c) { return c + 3 * (9 * c + c) + 2 * c; }

int64_t sc2head_params(int64_t c, int r) {
  const int64_t hidden = c / r;
  const int64_t sab = 2 * 9 + 1;
  const int64_t gate = (c * hidden + hidden) + 2 * hidden + (hidden * c + c);
  const int64_t cab = (4 * c * c + 2 * c) + 4 * c + 2 * gate;
  const int64_t scb = 9 * c;
  const int64_t fuse = 2 * c * c + c;
  return sab + cab + scb + fuse;
}

namespace {

std::string group_digits(int64_t v) {
  std::string d = std::to_string(v), out;
  for (size_t i = 0; i < d.size(); ++i) {
    if (i && (d.size() - i) % 3 == 0) out += ',';
    out += d[i];
  }
  return out;
}

}  // namespace

std::string CostReport::to_text() const {
  size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  char line[512];
  os << "input " << input_width << "x" << input_height << " (width x height), per image\n";
  std::snprintf(line, sizeof line, "%-*s  %-9s  %12s  %15s  %13s\n", static_cast<int>(name_w), "layer",
                "kind", "params", "MACs", "adds");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %-9s  %12s  %15s  %13s\n", static_cast<int>(name_w),
                  r.name.c_str(), r.kind.c_str(), group_digits(r.params).c_str(),
                  group_digits(r.macs).c_str(), group_digits(r.adds).c_str());
    os << line;
  }
  std::snprintf(line, sizeof line, "%-*s  %-9s  %12s  %15s  %13s\n", static_cast<int>(name_w), "total", "",
                group_digits(total_params()).c_str(), group_digits(total_macs()).c_str(),
                group_digits(total_adds()).c_str());
  os << line;
  std::snprintf(line, sizeof line, "params %.6f M | MACs %.6f G | FLOPs (2 x MACs) %.6f G\n",
                total_params() / 1e6, total_macs() / 1e9, total_flops() / 1e9);
  os << line;
  return os.str();
}

std::string CostReport::to_json() const {
  json j;
  j["input_width"] = input_width;
  j["input_height"] = input_height;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"name", r.name}, {"kind", r.kind}, {"params", r.params}, {"macs", r.macs}, {"adds", r.adds}});
  }
  j["total_params"] = total_params();
  j["total_macs"] = total_macs();
  j["total_flops"] = total_flops();
  j["total_adds"] = total_adds();
  return j.dump(2) + "\n";
}

std::string cpu_model_name() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string v = line.substr(colon + 1);
        v.erase(0, v.find_first_not_of(" \t"));
        return v;
      }
    }
  }
  return "unknown";
}

std::string BenchReport::to_json() const {
  json j = {{"latency_ms", latency_ms},
            {"samples", latency_ms.size()},
            {"fps_mean", fps_mean},
            {"fps_p50", fps_p50},
            {"fps_p95", fps_p95},
            {"latency_mean_ms", latency_mean_ms},
            {"batch", batch},
            {"threads", threads},
            {"warmup_iters", warmup_iters},
            {"seed", seed},
            {"config_hash", config_hash},
            {"cpu_model", cpu_model},
            {"input_width", input_width},
            {"input_height", input_height}};
  return j.dump(2) + "\n";
}

BenchReport BenchReport::from_json(const std::string& text) {
  const json j = json::parse(text);
  BenchReport r;
  r.latency_ms = j.at("latency_ms").get<std::vector<double>>();
  r.fps_mean = j.at("fps_mean").get<double>();
  r.fps_p50 = j.at("fps_p50").get<double>();
  r.fps_p95 = j.at("fps_p95").get<double>();
  r.latency_mean_ms = j.at("latency_mean_ms").get<double>();
  r.batch = j.at("batch").get<int>();
  r.threads = j.at("threads").get<int>();
  r.warmup_iters = j.at("warmup_iters").get<int>();
  r.seed = j.at("seed").get<uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.cpu_model = j.at("cpu_model").get<std::string>();
  r.input_width = j.at("input_width").get<int>();
  r.input_height = j.at("input_height").get<int>();
  return r;
}

BenchReport bench_inference(const PoseModel& model, const BenchOptions& opt) {
  if (opt.warmup_iters < 1) throw std::invalid_argument("bench: warmup must be >= 1");
  if (opt.timed_iters < 10) throw std::invalid_argument("bench: timed iterations must be >= 10");
  if (opt.batch < 1) throw std::invalid_argument("bench: batch must be >= 1");
  const ModelConfig& cfg = model.config();
  Rng rng(opt.seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> data(static_cast<size_t>(opt.batch) * 3 * cfg.input_height * cfg.input_width);
  for (float& v : data) v = dist(rng);
  const Tensor input = Tensor::from_data({opt.batch, 3, cfg.input_height, cfg.input_width}, std::move(data));

  const int previous = num_threads();
  set_num_threads(opt.threads);
  BenchReport rep;
  {
    NoGradGuard no_grad;
    for (int i = 0; i < opt.warmup_iters; ++i) model.forward(input, NormMode::kEval);
    for (int i = 0; i < opt.timed_iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      model.forward(input, NormMode::kEval);
      const auto t1 = std::chrono::steady_clock::now();
      rep.latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  set_num_threads(previous);

  std::vector<double> sorted = rep.latency_ms;
  std::sort(sorted.begin(), sorted.end());
  auto nearest_rank = [&](double pct) {
    const size_t rank = static_cast<size_t>(std::ceil(pct / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<size_t>(rank, 1, sorted.size()) - 1];
  };
  double sum = 0.0;
  for (double v : rep.latency_ms) sum += v;
  rep.latency_mean_ms = sum / static_cast<double>(rep.latency_ms.size());
  rep.fps_mean = opt.batch * 1000.0 / rep.latency_mean_ms;
  rep.fps_p50 = opt.batch * 1000.0 / nearest_rank(50);
  rep.fps_p95 = opt.batch * 1000.0 / nearest_rank(95);
  rep.batch = opt.batch;
  rep.threads = opt.threads;
  rep.warmup_iters = opt.warmup_iters;
  rep.seed = opt.seed;
  rep.config_hash = config_hash(cfg);
  rep.cpu_model = cpu_model_name();
  rep.input_width = cfg.input_width;
  rep.input_height = cfg.input_height;
  return rep;
}

}  // namespace cattlepose
