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
#include <json.hpp>

#include "../support/cost_oracle.hpp"
#include "cattlepose/config.hpp"
#include "cattlepose/model.hpp"
#include "cattlepose/profiler.hpp"

using namespace cattlepose;

namespace {

ModelConfig toggled(bool sfe, bool ra, bool sc2) {
  ModelConfig cfg = ModelConfig::reference();
  cfg.use_sfe = sfe;
  cfg.use_ra = ra;
  cfg.use_sc2head = sc2;
  cfg.validate();
  return cfg;
}

ModelConfig tiny_config() {
  return parse_model_config(
      "input_width = 64\n"
      "input_height = 48\n"
      "stem_channels = 8\n"
      "output_stride = 4\n"
      "cab_reduction = 2\n"
      "stage = inverted_residual 8 16 2 2\n"
      "stage = sfe 16 16 1\n"
      "stage = ra 16 16 1\n");
}

}  // namespace

TEST_SUITE("profiler") {
  TEST_CASE("single layer rows") {
    const CostRow c = conv_cost("c", 8, 16, 3, 1, 1, 1, true);
    CHECK(c.params == 1168);
    CHECK(conv_cost("dw", 32, 32, 3, 32, 1, 1, true).params == 320);
    const CostRow pw = conv_cost("pw", 8, 16, 1, 1, 32, 32, false);
    CHECK(pw.macs == 131072);
    CHECK(pw.params == 128);
    CHECK(linear_cost("fc", 10, 4, 1).params == 44);
    CHECK(linear_cost("fc", 10, 4, 16, false).macs == 640);
    CHECK_THROWS(conv_cost("bad", 6, 16, 3, 4, 1, 1, true));
    CHECK_THROWS(conv_cost("bad", 8, 16, 3, 1, 0, 4, true));
  }

  TEST_CASE("totals equal the row sums") {
    for (const ModelConfig& cfg : {toggled(true, true, true), toggled(false, true, false), tiny_config()}) {
      const CostReport r = count_params(cfg);
      int64_t p = 0, m = 0, a = 0;
      for (const auto& row : r.rows) {
        p += row.params;
        m += row.macs;
        a += row.adds;
      }
      CHECK(r.total_params() == p);
      CHECK(r.total_macs() == m);
      CHECK(r.total_adds() == a);
      CHECK(r.total_flops() == 2 * m);
    }
  }

  TEST_CASE("reference totals") {
    const ModelConfig cfg = ModelConfig::reference();
    const CostReport r = count_macs(cfg, 256, 192);
    CHECK(r.total_params() == 757531);
    CHECK(r.total_macs() == 77769376);
    CHECK(count_params(cfg).total_macs() == r.total_macs());
  }

  TEST_CASE("totals match the layer sheet over resolutions and toggles") {
    for (int mask = 0; mask < 8; ++mask) {
      const ModelConfig cfg = toggled(mask & 1, mask & 2, mask & 4);
      for (auto [w, h] : {std::pair{256, 192}, std::pair{512, 384}, std::pair{128, 96}, std::pair{192, 256}}) {
        const CostReport r = count_macs(cfg, w, h);
        const costref::Totals t = costref::totals(cfg, w, h);
        CAPTURE(mask);
        CAPTURE(w);
        CHECK(r.total_params() == t.params);
        CHECK(r.total_macs() == t.macs);
        CHECK(r.macs_of_kind("conv") == t.conv_macs);
      }
    }
    const ModelConfig tiny = tiny_config();
    CHECK(count_params(tiny).total_params() == costref::totals(tiny, 64, 48).params);
    CHECK(count_params(tiny).total_macs() == costref::totals(tiny, 64, 48).macs);
  }

  TEST_CASE("block rows carry the closed-form amounts") {
    const ModelConfig cfg = ModelConfig::reference();
    const CostReport r = count_params(cfg);
    int64_t sfe = 0, ra = 0;
    for (size_t i = 0; i < cfg.stages.size(); ++i) {
      const std::string p = "backbone.stage" + std::to_string(i) + ".";
      if (cfg.stages[i].kind == StageKind::kSfe) sfe += r.params_under(p);
      if (cfg.stages[i].kind == StageKind::kRa) ra += r.params_under(p);
    }
    CHECK(sfe == sfe_block_params(32));
    CHECK(ra == ra_block_params(64));
    CHECK(r.params_under("head.sc2") == sc2head_params(64, 4));
    CHECK(sfe_block_params(32) == 11456);
    CHECK(ra_block_params(64) == 2112);
    CHECK(sc2head_params(64, 4) == 29939);
  }

  TEST_CASE("doubling the resolution quadruples every conv row") {
    for (const ModelConfig& cfg : {toggled(true, true, true), toggled(false, false, false)}) {
      const CostReport a = count_macs(cfg, 256, 192), b = count_macs(cfg, 512, 384);
      REQUIRE(a.rows.size() == b.rows.size());
      int convs = 0;
      for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].name == b.rows[i].name);
        if (a.rows[i].kind != "conv") continue;
        CHECK(a.rows[i].params == b.rows[i].params);
        ++convs;
        CHECK(b.rows[i].macs == 4 * a.rows[i].macs);
      }
      CHECK(convs > 10);
      CHECK(b.macs_of_kind("conv") == 4 * a.macs_of_kind("conv"));
    }
  }

  TEST_CASE("params do not depend on resolution") {
    const ModelConfig cfg = ModelConfig::reference();
    const int64_t base = count_params(cfg).total_params();
    // The coordinate-classification layers are sized by the resolution; all
    // other rows must stay fixed.
    const CostReport a = count_macs(cfg, 256, 192), b = count_macs(cfg, 320, 224);
    for (size_t i = 0; i < a.rows.size(); ++i) {
      if (a.rows[i].name.rfind("head.simcc.", 0) == 0 && a.rows[i].kind == "linear") continue;
      CHECK(a.rows[i].params == b.rows[i].params);
    }
    CHECK(a.total_params() == base);
  }

  TEST_CASE("text and JSON reports") {
    const CostReport r = count_params(ModelConfig::reference());
    const std::string text = r.to_text();
    CHECK(text.find("input 256x192") != std::string::npos);
    CHECK(text.find("757,531") != std::string::npos);
    CHECK(text.find("77,769,376") != std::string::npos);
    CHECK(text.find("MACs 0.077769 G") != std::string::npos);
    CHECK(text.find("FLOPs (2 x MACs) 0.155539 G") != std::string::npos);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j["total_macs"] == 77769376);
    CHECK(j["total_flops"] == 2 * 77769376);
    CHECK(j["rows"].size() == r.rows.size());
    CHECK(j["input_width"] == 256);
  }

  TEST_CASE("benchmark statistics") {
    const PoseModel model(tiny_config(), 1);
    BenchOptions opt;
    opt.timed_iters = 10;
    opt.warmup_iters = 1;
    const BenchReport one = bench_inference(model, opt);
    CHECK(one.latency_ms.size() == 10);
    for (double v : {one.fps_mean, one.fps_p50, one.fps_p95}) {
      CHECK(std::isfinite(v));
      CHECK(v > 0);
    }
    CHECK(one.fps_p95 <= one.fps_p50);
    CHECK(one.config_hash == config_hash(tiny_config()));
    CHECK(one.threads == 1);

    opt.batch = 2;
    const BenchReport two = bench_inference(model, opt);
    opt.batch = 1;
    const BenchReport again = bench_inference(model, opt);
    auto median_ms = [](const BenchReport& r) { return r.batch * 1000.0 / r.fps_p50; };
    CHECK(median_ms(two) >= std::min(median_ms(one), median_ms(again)));
    const double ratio = one.fps_p50 / again.fps_p50;
    CHECK(ratio < 3.0);
    CHECK(ratio > 1.0 / 3.0);

    const BenchReport back = BenchReport::from_json(one.to_json());
    CHECK(back.latency_ms == one.latency_ms);
    CHECK(back.fps_mean == one.fps_mean);
    CHECK(back.config_hash == one.config_hash);
    CHECK(back.cpu_model == one.cpu_model);
    CHECK(back.to_json() == one.to_json());

    opt.timed_iters = 9;
    CHECK_THROWS(bench_inference(model, opt));
    opt.timed_iters = 10;
    opt.warmup_iters = 0;
    CHECK_THROWS(bench_inference(model, opt));
  }

  TEST_CASE("two threads also produce a valid report") {
    const PoseModel model(tiny_config(), 2);
    BenchOptions opt;
    opt.threads = 2;
    const BenchReport r = bench_inference(model, opt);
    CHECK(r.threads == 2);
    CHECK(r.latency_ms.size() == 10);
    CHECK(r.fps_mean > 0);
  }
}
