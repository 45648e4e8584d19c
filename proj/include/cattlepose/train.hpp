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
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cattlepose/dataset.hpp"
#include "cattlepose/head.hpp"
#include "cattlepose/metrics.hpp"
#include "cattlepose/model.hpp"

namespace cattlepose {

// One instance cropped to the model input, with crop-frame targets.
struct Sample {
  Tensor image;  // [3, H, W], normalized
  std::vector<KeypointTarget> targets;
  KeypointInstance instance;  // image frame
  Affine2 to_image;           // crop frame -> image frame
};

// Crops every instance of `dataset`; images[i] belongs to dataset.images[i].
std::vector<Sample> make_samples(const Dataset& dataset, const std::vector<Image>& images,
                                 const CropSpec& crop);
Sample make_sample(const Image& image, const KeypointInstance& inst, const CropSpec& crop);

Tensor stack_images(const std::vector<Sample>& samples, const std::vector<size_t>& indices);

class Adam {
 public:
  explicit Adam(const ParamStore& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Applies one update from the gradients currently held by the parameters.
  void step(ParamStore& params, double lr);
  int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

// Linear warmup from lr / warmup to lr over the first `warmup` iterations.
double warmup_lr(double lr, int iter, int warmup);

struct TrainOptions {
  int iters = 200;
  double lr = 1e-3;
  int batch = 8;
  double warmup_fraction = 0.1;
  uint64_t seed = 7;
  bool augment = false;
  AugmentPolicy policy;
};

struct LossRecord {
  int iter = 0;
  double lr = 0;
  double loss = 0;
};

struct TrainResult {
  std::vector<LossRecord> log;
  double initial_loss = 0;  // eval-mode loss over the training set before step 1
  double final_loss = 0;    // same measurement after the last step
  // The losses above are cross-entropy minus label entropy.
  double initial_cross_entropy = 0;
  double final_cross_entropy = 0;
  double label_entropy = 0;
  double pck_untrained = 0;  // PCK@0.1 on the held-out samples before training
  double pck_trained = 0;
  int clamped_labels = 0;
  double seconds = 0;
};

// Raised when a step yields a non-finite value.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int iter, uint64_t batch_seed, std::vector<size_t> indices)
      : std::runtime_error(what), iter(iter), batch_seed(batch_seed), indices(std::move(indices)) {}
  int iter;
  uint64_t batch_seed;
  std::vector<size_t> indices;
};

struct LossTerms {
  double kl = 0;
  double cross_entropy = 0;
  double label_entropy = 0;
};

// Means per visible keypoint over all samples, eval mode, no tape.
LossTerms evaluate_loss_terms(const PoseModel& model, const std::vector<Sample>& samples, int batch = 8);
double evaluate_loss(const PoseModel& model, const std::vector<Sample>& samples, int batch = 8);

struct InstancePrediction {
  std::vector<Point2> keypoints;  // image frame
  double score = 0;               // mean keypoint score
  std::vector<double> keypoint_scores;
};

std::vector<InstancePrediction> predict(const PoseModel& model, const std::vector<Sample>& samples,
                                        int batch = 8);
double pck_at(const std::vector<InstancePrediction>& preds, const std::vector<Sample>& samples,
              double alpha);

// Mini-batch Adam on `train`; `raw` (optional, same order as dataset
// images) enables augmentation. Batches come from a per-epoch shuffle seeded
// by derive_seed(seed, epoch).
TrainResult train_model(PoseModel& model, const std::vector<Sample>& train,
                        const std::vector<Sample>& heldout, const TrainOptions& options,
                        const std::function<void(const LossRecord&)>& on_step = {},
                        const std::vector<Image>* raw = nullptr, const Dataset* raw_dataset = nullptr);

}  // namespace cattlepose
