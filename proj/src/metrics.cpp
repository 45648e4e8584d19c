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

#include "cattlepose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace cattlepose {

using json = nlohmann::json;

double oks(const std::vector<Point2>& pred, const std::vector<Point2>& gt, const OksContext& ctx) {
  const size_t k = gt.size();
  if (pred.size() != k || ctx.sigmas.size() != k || ctx.visibility.size() != k) {
    throw std::invalid_argument("oks: prediction, ground truth, sigma and visibility sizes differ");
  }
  if (!(ctx.area > 0.0)) throw std::invalid_argument("oks: object scale must be positive");
  double total = 0.0;
  int visible = 0;
  for (size_t i = 0; i < k; ++i) {
    if (ctx.visibility[i] <= 0) continue;
    if (!(ctx.sigmas[i] > 0.0)) throw std::invalid_argument("oks: sigmas must be positive");
    const double dx = pred[i].x - gt[i].x, dy = pred[i].y - gt[i].y;
    total += std::exp(-(dx * dx + dy * dy) / (2.0 * ctx.area * ctx.sigmas[i] * ctx.sigmas[i]));
    ++visible;
  }
  if (visible == 0) throw std::invalid_argument("oks: no visible keypoints");
  return total / visible;
}

OksContext oks_context(const KeypointInstance& gt, const SkeletonSpec& skeleton) {
  OksContext ctx;
  ctx.area = gt.scale_area();
  ctx.sigmas = skeleton.sigmas;
  for (const auto& k : gt.keypoints) ctx.visibility.push_back(k.v);
  return ctx;
}

namespace {

std::vector<Point2> points_of(const KeypointInstance& inst) {
  std::vector<Point2> p;
  for (const auto& k : inst.keypoints) p.push_back({k.x, k.y});
  return p;
}

}  // namespace

double oks(const std::vector<Point2>& pred, const KeypointInstance& gt, const SkeletonSpec& skeleton) {
  return oks(pred, points_of(gt), oks_context(gt, skeleton));
}

EvalParams EvalParams::coco() {
  EvalParams p;
  for (int i = 0; i < 10; ++i) p.thresholds.push_back((50 + 5 * i) / 100.0);
  return p;
}

MetricsReport ap_ar(const std::vector<Detection>& detections,
                    const std::vector<KeypointInstance>& ground_truth, const SkeletonSpec& skeleton,
                    const EvalParams& params) {
  if (params.max_dets < 1) throw std::invalid_argument("ap_ar: max_dets must be >= 1");
  MetricsReport rep;
  rep.thresholds = params.thresholds;
  const size_t nt = params.thresholds.size();

  std::map<int64_t, std::vector<size_t>> gts_by_image, dets_by_image;
  for (size_t g = 0; g < ground_truth.size(); ++g) {
    if (ground_truth[g].num_visible() > 0) gts_by_image[ground_truth[g].image_id].push_back(g);
  }
  for (size_t d = 0; d < detections.size(); ++d) dets_by_image[detections[d].image_id].push_back(d);
  for (const auto& [id, v] : gts_by_image) rep.num_gt += static_cast<int64_t>(v.size());

  // Per kept detection: score, and matched flag per threshold. Kept in image
  // id order, then per-image rank, so the global sort below is reproducible.
  struct Scored {
    double score;
    std::vector<char> matched;
  };
  std::vector<Scored> scored;
  for (auto& [image_id, dets] : dets_by_image) {
    std::stable_sort(dets.begin(), dets.end(), [&](size_t a, size_t b) {
      return detections[a].score > detections[b].score;
    });
    if (dets.size() > static_cast<size_t>(params.max_dets)) dets.resize(static_cast<size_t>(params.max_dets));
    const auto git = gts_by_image.find(image_id);
    const std::vector<size_t> empty;
    const std::vector<size_t>& gts = git == gts_by_image.end() ? empty : git->second;
    std::vector<std::vector<double>> sim(dets.size(), std::vector<double>(gts.size()));
    for (size_t i = 0; i < dets.size(); ++i) {
      for (size_t j = 0; j < gts.size(); ++j) {
        sim[i][j] = oks(detections[dets[i]].keypoints, ground_truth[gts[j]], skeleton);
      }
    }
    const size_t base = scored.size();
    for (size_t i = 0; i < dets.size(); ++i) {
      scored.push_back({detections[dets[i]].score, std::vector<char>(nt, 0)});
    }
    for (size_t t = 0; t < nt; ++t) {
      std::vector<char> taken(gts.size(), 0);
      for (size_t i = 0; i < dets.size(); ++i) {
        int best = -1;
        double best_oks = params.thresholds[t];
        for (size_t j = 0; j < gts.size(); ++j) {
          if (taken[j]) continue;
          if (sim[i][j] > best_oks || (best < 0 && sim[i][j] >= best_oks)) {
            best = static_cast<int>(j);
            best_oks = sim[i][j];
          }
        }
        if (best >= 0) {
          taken[static_cast<size_t>(best)] = 1;
          scored[base + i].matched[t] = 1;
        }
      }
    }
  }
  rep.num_dets = static_cast<int64_t>(scored.size());
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });

  rep.ap.assign(nt, std::nullopt);
  rep.ar.assign(nt, std::nullopt);
  if (rep.num_gt > 0) {
    for (size_t t = 0; t < nt; ++t) {
      std::vector<double> precision, recall;
      int64_t tp = 0, fp = 0;
      for (const auto& s : scored) {
        (s.matched[t] ? tp : fp) += 1;
        recall.push_back(static_cast<double>(tp) / rep.num_gt);
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      }
      for (size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
      double sum = 0.0;
      for (int r = 0; r <= 100; ++r) {
        const double level = r / 100.0;
        const auto it = std::lower_bound(recall.begin(), recall.end(), level);
        if (it != recall.end()) sum += precision[static_cast<size_t>(it - recall.begin())];
      }
      rep.ap[t] = sum / 101.0;
      rep.ar[t] = recall.empty() ? 0.0 : recall.back();
    }
    auto mean_of = [&](const std::vector<std::optional<double>>& v) -> std::optional<double> {
      if (v.empty()) return std::nullopt;
      double s = 0.0;
      for (const auto& x : v) s += *x;
      return s / static_cast<double>(v.size());
    };
    rep.AP = mean_of(rep.ap);
    rep.AR = mean_of(rep.ar);
    for (size_t t = 0; t < nt; ++t) {
      if (std::fabs(params.thresholds[t] - 0.5) < 1e-12) rep.AP50 = rep.ap[t], rep.AR50 = rep.ar[t];
      if (std::fabs(params.thresholds[t] - 0.75) < 1e-12) rep.AP75 = rep.ap[t], rep.AR75 = rep.ar[t];
    }
  }
  return rep;
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "absent";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

json jval(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "AP = " << fmt(AP) << "\nAP50 = " << fmt(AP50) << "\nAP75 = " << fmt(AP75) << "\nAR = " << fmt(AR)
     << "\nAR50 = " << fmt(AR50) << "\nAR75 = " << fmt(AR75) << "\n";
  for (size_t t = 0; t < thresholds.size(); ++t) {
    char key[32];
    std::snprintf(key, sizeof key, "%.2f", thresholds[t]);
    os << "AP@" << key << " = " << fmt(ap[t]) << "\nAR@" << key << " = " << fmt(ar[t]) << "\n";
  }
  os << "num_gt = " << num_gt << "\nnum_dets = " << num_dets << "\n";
  if (params) os << "params = " << *params << "\n";
  if (macs) os << "macs = " << *macs << "\nflops = " << 2 * *macs << "\n";
  if (fps) os << "fps = " << fmt(fps) << "\n";
  return os.str();
}

std::string MetricsReport::to_json() const {
  json j = {{"AP", jval(AP)},   {"AP50", jval(AP50)}, {"AP75", jval(AP75)},
            {"AR", jval(AR)},   {"AR50", jval(AR50)}, {"AR75", jval(AR75)},
            {"num_gt", num_gt}, {"num_dets", num_dets}};
  j["thresholds"] = thresholds;
  json ap_list = json::array(), ar_list = json::array();
  for (size_t t = 0; t < thresholds.size(); ++t) {
    ap_list.push_back(jval(ap[t]));
    ar_list.push_back(jval(ar[t]));
  }
  j["ap_per_threshold"] = ap_list;
  j["ar_per_threshold"] = ar_list;
  if (params) j["params"] = *params;
  if (macs) {
    j["macs"] = *macs;
    j["flops"] = 2 * *macs;
  }
  if (fps) j["fps"] = *fps;
  return j.dump(2) + "\n";
}

double pck(const std::vector<Point2>& pred, const KeypointInstance& gt, double alpha) {
  PckCounter c;
  c.add(pred, gt, alpha);
  return c.value();
}

void PckCounter::add(const std::vector<Point2>& pred, const KeypointInstance& gt, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("pck: alpha must lie in (0, 1]");
  if (pred.size() != gt.keypoints.size()) throw std::invalid_argument("pck: keypoint count mismatch");
  const double radius = alpha * std::max(gt.bbox.w, gt.bbox.h);
  for (size_t i = 0; i < pred.size(); ++i) {
    const auto& k = gt.keypoints[i];
    if (k.v <= 0) continue;
    ++total;
    correct += std::hypot(pred[i].x - k.x, pred[i].y - k.y) <= radius;
  }
}

double PckCounter::value() const {
  if (total == 0) throw std::invalid_argument("pck: no visible keypoints");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string serialize_results(const std::vector<Detection>& dets) {
  json out = json::array();
  for (const auto& d : dets) {
    json kps = json::array();
    for (const auto& p : d.keypoints) {
      kps.push_back(p.x);
      kps.push_back(p.y);
      kps.push_back(1);
    }
    out.push_back({{"image_id", d.image_id}, {"category_id", d.category_id}, {"keypoints", kps}, {"score", d.score}});
  }
  return out.dump(1) + "\n";
}

std::vector<Detection> parse_results(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("malformed results JSON: ") + e.what());
  }
  if (!root.is_array()) throw DatasetError("results file must be a JSON array");
  std::vector<Detection> out;
  for (size_t i = 0; i < root.size(); ++i) {
    const json& r = root[i];
    const std::string where = "result " + std::to_string(i);
    if (!r.is_object() || !r.contains("image_id") || !r.contains("keypoints") || !r.contains("score")) {
      throw DatasetError(where + ": needs image_id, keypoints and score");
    }
    Detection d;
    try {
      d.image_id = r["image_id"].get<int64_t>();
      if (r.contains("category_id")) d.category_id = r["category_id"].get<int64_t>();
      d.score = r["score"].get<double>();
      const json& k = r["keypoints"];
      if (!k.is_array() || k.size() != 3 * static_cast<size_t>(kNumKeypoints)) {
        throw DatasetError(where + ": keypoints must have " + std::to_string(3 * kNumKeypoints) + " numbers");
      }
      for (int j = 0; j < kNumKeypoints; ++j) d.keypoints.push_back({k[3 * j].get<double>(), k[3 * j + 1].get<double>()});
    } catch (const json::type_error& e) {
      throw DatasetError(where + ": " + e.what());
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> results_from_ground_truth(const std::vector<KeypointInstance>& gt) {
  std::vector<Detection> out;
  for (const auto& inst : gt) {
    out.push_back({inst.image_id, inst.category_id, points_of(inst), 1.0});
  }
  return out;
}

}  // namespace cattlepose
