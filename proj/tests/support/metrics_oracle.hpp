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

// Independent OKS summation, exhaustive-assignment AP/AR and a random scene
// generator for keypoint evaluation tests.

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "cattlepose/metrics.hpp"

namespace metricsref {

using cattlepose::Detection;
using cattlepose::KeypointInstance;
using cattlepose::Point2;

// Per-keypoint similarity exp(-d^2 / (2 s^2 k^2)), averaged over v > 0.
inline double oks(const std::vector<Point2>& pred, const std::vector<Point2>& gt, double s2,
                  const std::vector<double>& k, const std::vector<int>& v) {
  double num = 0;
  double den = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (v[i] == 0) continue;
    const double ex = pred[i].x - gt[i].x;
    const double ey = pred[i].y - gt[i].y;
    const double var = k[i] * k[i] * s2;
    num += std::exp(-(ex * ex + ey * ey) / var / 2.0);
    den += 1;
  }
  return num / den;
}

inline double oks(const std::vector<Point2>& pred, const KeypointInstance& gt, const std::vector<double>& k) {
  std::vector<Point2> g;
  std::vector<int> v;
  for (const auto& p : gt.keypoints) {
    g.push_back({p.x, p.y});
    v.push_back(p.v);
  }
  const double s2 = gt.area ? *gt.area : gt.bbox.w * gt.bbox.h;
  return oks(pred, g, s2, k, v);
}

struct Result {
  std::vector<std::optional<double>> ap, ar;
};

// For every threshold: rank detections (score desc, then image id, then
// index), enumerate all injective detection -> ground-truth assignments per
// image with OKS >= t, keep the lexicographically best one in rank order
// (match beats no match, then higher OKS, then lower ground-truth index),
// then integrate precision at 101 recall levels.
inline Result evaluate(const std::vector<Detection>& dets, const std::vector<KeypointInstance>& gts,
                       const std::vector<double>& sigmas, const std::vector<double>& thresholds, size_t max_dets) {
  Result out;
  std::map<int64_t, std::vector<size_t>> det_img, gt_img;
  size_t num_gt = 0;
  for (size_t g = 0; g < gts.size(); ++g) {
    bool any = false;
    for (const auto& p : gts[g].keypoints) any = any || p.v > 0;
    if (!any) continue;
    gt_img[gts[g].image_id].push_back(g);
    ++num_gt;
  }
  for (size_t d = 0; d < dets.size(); ++d) det_img[dets[d].image_id].push_back(d);

  for (double t : thresholds) {
    // (score, rank key, matched)
    struct Row {
      double score;
      int64_t image;
      size_t pos;
      bool tp;
    };
    std::vector<Row> rows;
    for (auto [image, ds] : det_img) {
      // Insertion sort by descending score keeps equal scores in index order.
      for (size_t i = 1; i < ds.size(); ++i)
        for (size_t j = i; j > 0 && dets[ds[j]].score > dets[ds[j - 1]].score; --j) std::swap(ds[j], ds[j - 1]);
      if (ds.size() > max_dets) ds.resize(max_dets);
      const std::vector<size_t> gs = gt_img.count(image) ? gt_img[image] : std::vector<size_t>{};
      std::vector<std::vector<double>> sim(ds.size(), std::vector<double>(gs.size()));
      for (size_t i = 0; i < ds.size(); ++i)
        for (size_t j = 0; j < gs.size(); ++j) sim[i][j] = oks(dets[ds[i]].keypoints, gts[gs[j]], sigmas);

      std::vector<int> cur(ds.size(), -1), best;
      // Lexicographic comparison of two assignments in rank order.
      auto better = [&](const std::vector<int>& a, const std::vector<int>& b) {
        for (size_t i = 0; i < a.size(); ++i) {
          if (a[i] == b[i]) continue;
          if (b[i] < 0) return true;
          if (a[i] < 0) return false;
          if (sim[i][a[i]] != sim[i][b[i]]) return sim[i][a[i]] > sim[i][b[i]];
          return a[i] < b[i];
        }
        return false;
      };
      std::vector<char> used(gs.size(), 0);
      std::function<void(size_t)> rec = [&](size_t i) {
        if (i == ds.size()) {
          if (best.empty() || better(cur, best)) best = cur;
          return;
        }
        cur[i] = -1;
        rec(i + 1);
        for (size_t j = 0; j < gs.size(); ++j) {
          if (used[j] || sim[i][j] < t) continue;
          used[j] = 1;
          cur[i] = static_cast<int>(j);
          rec(i + 1);
          used[j] = 0;
          cur[i] = -1;
        }
      };
      rec(0);
      for (size_t i = 0; i < ds.size(); ++i) rows.push_back({dets[ds[i]].score, image, i, best[i] >= 0});
    }
    for (size_t i = 1; i < rows.size(); ++i)
      for (size_t j = i; j > 0; --j) {
        const Row &a = rows[j], &b = rows[j - 1];
        const bool before = a.score > b.score || (a.score == b.score && (a.image < b.image || (a.image == b.image && a.pos < b.pos)));
        if (!before) break;
        std::swap(rows[j], rows[j - 1]);
      }
    if (num_gt == 0) {
      out.ap.push_back(std::nullopt);
      out.ar.push_back(std::nullopt);
      continue;
    }
    std::vector<double> prec, rec;
    double tp = 0, fp = 0;
    for (const Row& r : rows) {
      if (r.tp) tp += 1;
      else fp += 1;
      prec.push_back(tp / (tp + fp));
      rec.push_back(tp / static_cast<double>(num_gt));
    }
    double sum = 0;
    for (int level = 0; level <= 100; ++level) {
      const double r = level / 100.0;
      double p = 0;
      for (size_t i = 0; i < rec.size(); ++i) {
        if (rec[i] >= r) {
          // Envelope: best precision at this or any later rank.
          for (size_t j = i; j < prec.size(); ++j) p = std::max(p, prec[j]);
          break;
        }
      }
      sum += p;
    }
    out.ap.push_back(sum / 101.0);
    out.ar.push_back(rec.empty() ? 0.0 : rec.back());
  }
  return out;
}

struct Scene {
  std::vector<KeypointInstance> gts;
  std::vector<Detection> dets;
};

// Up to 3 ground truths and 3 detections over one or two images. Detections
// are noisy copies of ground truths (or of nothing) at mixed noise levels;
// scores come from a small set so ties occur.
inline Scene random_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> count(0, 3), image(1, 2), vis(0, 2);
  Scene s;
  const int ng = count(rng), nd = count(rng);
  for (int g = 0; g < ng; ++g) {
    KeypointInstance inst;
    inst.id = g + 1;
    inst.image_id = image(rng);
    inst.bbox = {10 + 100 * u(rng), 10 + 100 * u(rng), 20 + 80 * u(rng), 20 + 80 * u(rng)};
    if (u(rng) < 0.5) inst.area = 0.5 * inst.bbox.w * inst.bbox.h;
    const bool blank = u(rng) < 0.1;
    for (auto& k : inst.keypoints) {
      k.x = inst.bbox.x + u(rng) * inst.bbox.w;
      k.y = inst.bbox.y + u(rng) * inst.bbox.h;
      k.v = blank ? 0 : vis(rng);
    }
    if (!blank && inst.num_visible() == 0) inst.keypoints[0].v = 2;
    s.gts.push_back(inst);
  }
  const std::vector<double> scores = {0.2, 0.5, 0.5, 0.9, 0.7};
  const std::vector<double> noise = {0.5, 2, 4, 7, 12, 30};
  for (int d = 0; d < nd; ++d) {
    Detection det;
    det.image_id = image(rng);
    det.score = scores[rng() % scores.size()];
    const double sd = noise[rng() % noise.size()];
    std::normal_distribution<double> n(0, sd);
    if (!s.gts.empty() && u(rng) < 0.85) {
      const KeypointInstance& src = s.gts[rng() % s.gts.size()];
      det.image_id = u(rng) < 0.8 ? src.image_id : det.image_id;
      for (const auto& k : src.keypoints) det.keypoints.push_back({k.x + n(rng), k.y + n(rng)});
    } else {
      for (int k = 0; k < 16; ++k) det.keypoints.push_back({200 * u(rng), 200 * u(rng)});
    }
    s.dets.push_back(det);
  }
  return s;
}

}  // namespace metricsref
