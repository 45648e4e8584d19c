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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cattlepose/dataset.hpp"

namespace cattlepose {

struct Point2 {
  double x = 0, y = 0;
};

struct OksContext {
  double area = 0;             // object scale s^2, pixels^2
  std::vector<double> sigmas;  // k_i
  std::vector<int> visibility; // v_i; only v_i > 0 contributes
};

// sum_i exp(-d_i^2 / (2 s^2 k_i^2)) [v_i > 0] / sum_i [v_i > 0]
double oks(const std::vector<Point2>& pred, const std::vector<Point2>& gt, const OksContext& ctx);
OksContext oks_context(const KeypointInstance& gt, const SkeletonSpec& skeleton);
double oks(const std::vector<Point2>& pred, const KeypointInstance& gt, const SkeletonSpec& skeleton);

struct Detection {
  int64_t image_id = 0;
  int64_t category_id = 1;
  std::vector<Point2> keypoints;
  double score = 0;
};

struct EvalParams {
  std::vector<double> thresholds;  // default 0.50, 0.55, ..., 0.95
  int max_dets = 20;

  static EvalParams coco();
};

struct MetricsReport {
  std::vector<double> thresholds;
  // Absent when no ground-truth instance has a visible keypoint.
  std::vector<std::optional<double>> ap;  // per threshold
  std::vector<std::optional<double>> ar;  // per threshold
  std::optional<double> AP, AP50, AP75, AR, AR50, AR75;
  int64_t num_gt = 0;
  int64_t num_dets = 0;

  // Optional run-level cost and speed fields.
  std::optional<int64_t> params;
  std::optional<int64_t> macs;
  std::optional<double> fps;

  std::string to_text() const;  // "key = value" lines, "absent" for missing
  std::string to_json() const;
};

// Greedy COCO keypoint matching per image: detections in descending score
// (ties: lower index first), top max_dets per image; each takes the
// unmatched ground truth with the highest OKS >= threshold (ties: lower
// ground-truth index). Ground truths without visible keypoints are skipped.
// AP integrates the monotone precision envelope at 101 recall points; AR
// is the final recall.
MetricsReport ap_ar(const std::vector<Detection>& detections,
                    const std::vector<KeypointInstance>& ground_truth, const SkeletonSpec& skeleton,
                    const EvalParams& params = EvalParams::coco());

// Fraction of visible keypoints within alpha * max(bbox w, h) (inclusive).
double pck(const std::vector<Point2>& pred, const KeypointInstance& gt, double alpha);

// Running PCK over many instances.
struct PckCounter {
  int64_t correct = 0;
  int64_t total = 0;
  void add(const std::vector<Point2>& pred, const KeypointInstance& gt, double alpha);
  double value() const;  // throws when nothing was counted
};

// COCO results records: [{image_id, category_id, keypoints[48], score}].
std::string serialize_results(const std::vector<Detection>& dets);
std::vector<Detection> parse_results(const std::string& json_text);
// Ground truth as perfect detections (score 1); v = 0 keypoints copy through.
std::vector<Detection> results_from_ground_truth(const std::vector<KeypointInstance>& gt);

}  // namespace cattlepose
