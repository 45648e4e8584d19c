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

// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "../support/blocks.hpp"
#include "../support/metrics_oracle.hpp"
#include "cattlepose/checkpoint.hpp"
#include "cattlepose/config.hpp"
#include "cattlepose/dataset.hpp"
#include "cattlepose/gradcheck.hpp"
#include "cattlepose/metrics.hpp"
#include "cattlepose/model.hpp"
#include "cattlepose/profiler.hpp"
#include "cattlepose/synth.hpp"
#include "cattlepose/wavelet.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cattlepose;
using testutil::bit_equal;
using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

int run_cli(const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = std::string("'") + CATTLEPOSE_CLI + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >'" + log.string() + ".out' 2>'" + log.string() + ".err'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string body = read_file(e.path().string());
    if (e.path().filename() == "manifest.json") {
      json j = json::parse(body);
      j.erase("started_at");
      j.erase("finished_at");
      body = j.dump();
    }
    files[fs::relative(e.path(), dir).string()] = body;
  }
  return files;
}

Outcome wavelet_reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int64_t> half(1, 8), lead(1, 3);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = ref::random_tensor({lead(rng), lead(rng), 2 * half(rng), 2 * half(rng)}, rng, -4, 4);
    const Tensor y = idwt2_haar(dwt2_haar(x));
    for (size_t i = 0; i < x.vec().size(); ++i) worst = std::max(worst, static_cast<double>(std::fabs(y.vec()[i] - x.vec()[i])));
  }
  const double s = seconds_since(t0);
  return {worst < 1e-5 && s < 5.0, fmt("max error %.3g over 100 tensors in %.2f s", worst, s)};
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const blocks::GradSuite suite;
  double worst = 0;
  std::string worst_name;
  for (const auto& c : suite.cases()) {
    const GradCheckResult r = grad_check(c.fn, c.input, c.reference);
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_name = c.name;
    }
  }
  const double s = seconds_since(t0);
  return {worst < 5e-3 && s < 60.0,
          fmt("8 blocks, worst relative error %.3g", worst) + " (" + worst_name + ")" + fmt(" in %.2f s", s)};
}

Outcome residual_identities() {
  blocks::Bench b(11);
  std::mt19937_64 rng(11);
  StageParams sfe = make_sfe(b.store, "sfe", 6, b.rng);
  StageParams ra = make_ra(b.store, "ra", 6, b.rng);
  HeadConfig hc;
  hc.in_channels = 6;
  hc.reduction = 3;
  auto head = make_sc2head(b.store, b.buffers, "sc2", hc, b.rng);
  blocks::randomize(b.store, 12);
  zero_final_projection(sfe);
  zero_final_projection(ra);
  for (float& v : head.fuse_w.mutable_data()) v = 0.0f;
  for (float& v : head.fuse_b.mutable_data()) v = 0.0f;
  int ok = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = ref::random_tensor({2, 6, 10, 8}, rng, -3, 3);
    ok += bit_equal(sfe_block(x, std::get<SfeParams>(sfe)), x);
    ok += bit_equal(ra_block(x, std::get<RaParams>(ra)), x);
    ok += bit_equal(sc2head_features(x, head, NormMode::kEval), x);
    total += 3;
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " bit-identical (SFE, RA, SC2 fusion)"};
}

Outcome oks_oracle() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t k = 1 + rng() % 16;
    std::vector<Point2> p(k), g(k);
    std::vector<double> s(k);
    std::vector<int> v(k);
    for (size_t i = 0; i < k; ++i) {
      g[i] = {300 * u(rng), 300 * u(rng)};
      p[i] = {g[i].x + 60 * (u(rng) - 0.5), g[i].y + 60 * (u(rng) - 0.5)};
      s[i] = 0.02 + 0.1 * u(rng);
      v[i] = static_cast<int>(rng() % 3);
    }
    v[rng() % k] = 2;
    const double area = 50 + 2e4 * u(rng);
    worst = std::max(worst, std::fabs(oks(p, g, OksContext{area, s, v}) - metricsref::oks(p, g, area, s, v)));
  }
  const double hand = oks({{10, 0}}, {{0, 0}}, OksContext{1e4, {0.05}, {2}});
  const double hand_err = std::fabs(hand - std::exp(-2.0));
  return {worst < 1e-9 && hand_err < 1e-6,
          fmt("max deviation %.3g over 1000 triples; hand case %.9f (error %.3g)", worst, hand, hand_err)};
}

Outcome ap_ar_oracle() {
  const SkeletonSpec sk = SkeletonSpec::cattle();
  const EvalParams p = EvalParams::coco();
  std::mt19937_64 rng(2024);
  int mismatches = 0;
  for (int scene = 0; scene < 200; ++scene) {
    const metricsref::Scene s = metricsref::random_scene(rng);
    const MetricsReport r = ap_ar(s.dets, s.gts, sk, p);
    const metricsref::Result e = metricsref::evaluate(s.dets, s.gts, sk.sigmas, p.thresholds, 20);
    for (size_t t = 0; t < p.thresholds.size(); ++t) mismatches += (r.ap[t] != e.ap[t]) + (r.ar[t] != e.ar[t]);
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 200 scenes x 10 thresholds"};
}

Outcome toy_training(const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = work / "train";
  const int code = run_cli({"train", "--synthetic", "64", "--iters", "200", "--seed", "7", "--out", out.string()},
                           work / "train_log");
  const double s = seconds_since(t0);
  if (code != 0) return {false, "train exited with " + std::to_string(code)};
  const json r = json::parse(read_file((out / "train_report.json").string()));
  const double ratio = r["loss_ratio"], before = r["pck_0.1_untrained"], after = r["pck_0.1_trained"];
  const double ce_ratio = r["final_cross_entropy"].get<double>() / r["initial_cross_entropy"].get<double>();
  return {ratio <= 0.5 && after > before && s < 600.0,
          fmt("loss (KL) ratio %.4f [cross-entropy ratio %.4f, label entropy %.3f], ", ratio, ce_ratio,
              r["label_entropy"].get<double>()) +
              fmt("PCK@0.1 %.4f -> %.4f in %.0f s", before, after, s)};
}

Outcome cost_bookkeeping() {
  std::vector<ModelConfig> configs;
  for (int mask = 0; mask < 8; ++mask) {
    ModelConfig c = ModelConfig::reference();
    c.use_sfe = mask & 1;
    c.use_ra = mask & 2;
    c.use_sc2head = mask & 4;
    c.validate();
    configs.push_back(c);
  }
  bool ok = true;
  for (const auto& cfg : configs) {
    const PoseModel m(cfg, 3);
    std::ostringstream os;
    write_checkpoint(os, m.params().entries());
    std::istringstream is(os.str());
    ok = ok && count_params(m).total_params() == checkpoint_scalar_count(read_checkpoint(is));
  }
  const int64_t all = count_params(configs[7]).total_params();
  ok = ok && all - count_params(configs[6]).total_params() == sfe_block_params(32);
  ok = ok && all - count_params(configs[5]).total_params() == ra_block_params(64);
  ok = ok && all - count_params(configs[3]).total_params() == sc2head_params(64, 4);
  int conv_rows = 0;
  for (const auto& cfg : configs) {
    const CostReport a = count_macs(cfg, 256, 192), b = count_macs(cfg, 512, 384);
    for (size_t i = 0; i < a.rows.size(); ++i) {
      if (a.rows[i].kind != "conv") continue;
      ok = ok && b.rows[i].macs == 4 * a.rows[i].macs;
      ++conv_rows;
    }
  }
  return {ok, "8 configs; params " + std::to_string(all) + ", checkpoint scalars, toggle deltas, " +
                  std::to_string(conv_rows) + " conv rows x4"};
}

Outcome table_machinery(const fs::path& work) {
  const std::string fixtures = CATTLEPOSE_FIXTURE_DIR;
  const fs::path out = work / "stats";
  const int code = run_cli({"stats", "--annotations", fixtures + "/visibility_fixture.json", "--split",
                            fixtures + "/visibility_fixture_split.tsv", "--out", out.string()},
                           work / "stats_log");
  if (code != 0) return {false, "stats exited with " + std::to_string(code)};
  const json rows = json::parse(read_file((out / "stats.json").string()));
  const std::string printed = read_file((out / "stats.txt").string());
  std::istringstream expected(read_file(fixtures + "/visibility_expected_split.tsv"));
  std::string line;
  size_t i = 0;
  bool ok = true;
  while (std::getline(expected, line)) {
    std::istringstream cols(line);
    std::vector<std::string> cell(5);
    for (auto& c : cell) std::getline(cols, c, '\t');
    ok = ok && i < rows.size() && rows[i]["split"] == cell[0] && rows[i]["invisible"] == std::stoll(cell[1]) &&
         rows[i]["partially_visible"] == std::stoll(cell[2]) && rows[i]["visible"] == std::stoll(cell[3]) &&
         rows[i]["total"] == std::stoll(cell[4]);
    for (int c = 1; c <= 3; ++c) ok = ok && printed.find(cell[c]) != std::string::npos;
    ++i;
  }
  ok = ok && i == rows.size() && format_percent(100.0 * 52965 / 65104) == "81.35%";
  return {ok, std::to_string(i) + " split rows match the counting script; 52,965 of 65,104 -> " +
                  format_percent(100.0 * 52965 / 65104)};
}

Outcome determinism(const fs::path& work) {
  const std::string data = (work / "det_data").string();
  if (run_cli({"synth", "--synthetic", "6", "--seed", "5", "--out", data}, work / "det_synth") != 0) {
    return {false, "synth failed"};
  }
  const std::string ann = data + "/annotations.json", images = data + "/images";
  const std::string ckpt = (work / "det_train" / "model.ckpt").string();
  const std::vector<std::vector<std::string>> commands = {
      {"train", "--synthetic", "8", "--heldout", "4", "--iters", "4", "--batch", "4", "--seed", "11", "--out",
       (work / "det_train").string()},
      {"eval", "--checkpoint", ckpt, "--annotations", ann, "--images", images, "--out", (work / "det_eval").string()},
      {"viz", "--checkpoint", ckpt, "--annotations", ann, "--images", images, "--out", (work / "det_viz").string()},
  };
  int identical = 0;
  size_t files = 0;
  for (const auto& args : commands) {
    const fs::path out = args.back();
    if (run_cli(args, work / ("det_" + args[0] + "_1")) != 0) return {false, args[0] + " failed"};
    const auto first = snapshot(out);
    if (run_cli(args, work / ("det_" + args[0] + "_2")) != 0) return {false, args[0] + " failed on rerun"};
    identical += first == snapshot(out);
    files += first.size();
  }
  return {identical == 3, std::to_string(identical) + "/3 commands byte-identical across reruns (" +
                              std::to_string(files) + " artifacts)"};
}

Outcome benchmark(const fs::path& work) {
  const fs::path out = work / "bench";
  const int code = run_cli({"bench", "--iters", "10", "--warmup", "2", "--threads", "1", "--out", out.string()},
                           work / "bench_log");
  if (code != 0) return {false, "bench exited with " + std::to_string(code)};
  const std::string text = read_file((out / "bench.json").string());
  const BenchReport r = BenchReport::from_json(text);
  const bool ok = r.latency_ms.size() == 10 && std::isfinite(r.fps_mean) && r.fps_mean > 0 &&
                  std::isfinite(r.fps_p50) && r.fps_p50 > 0 && std::isfinite(r.fps_p95) && r.fps_p95 > 0 &&
                  r.to_json() == text && r.config_hash == config_hash(ModelConfig::reference());
  return {ok, fmt("fps mean %.2f, p50 %.2f, p95 %.2f (reported only)", r.fps_mean, r.fps_p50, r.fps_p95)};
}

}  // namespace

int main() {
  TempDir dir("acceptance");
  const fs::path work = dir.str();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"wavelet perfect reconstruction", wavelet_reconstruction},
      {"block gradient suite", gradient_suite},
      {"residual identities", residual_identities},
      {"OKS oracle", oks_oracle},
      {"AP/AR exhaustive oracle", ap_ar_oracle},
      {"toy training", [&] { return toy_training(work); }},
      {"cost bookkeeping", cost_bookkeeping},
      {"visibility table machinery", [&] { return table_machinery(work); }},
      {"determinism", [&] { return determinism(work); }},
      {"benchmark harness", [&] { return benchmark(work); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
