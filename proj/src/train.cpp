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

#include "cattlepose/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "cattlepose/params.hpp"

namespace cattlepose {

Sample make_sample(const Image& image, const KeypointInstance& inst, const CropSpec& crop) {
  CropResult c = crop_and_normalize(image, inst.bbox, crop);
  Sample s;
  s.image = c.image;
  s.instance = inst;
  s.to_image = c.to_image;
  const KeypointInstance in_crop = transform_instance(inst, c.to_crop);
  for (const auto& k : in_crop.keypoints) {
    s.targets.push_back({static_cast<float>(k.x), static_cast<float>(k.y), k.v});
  }
  return s;
}

std::vector<Sample> make_samples(const Dataset& ds, const std::vector<Image>& images, const CropSpec& crop) {
  if (images.size() != ds.images.size()) throw DatasetError("image list does not match the annotation images");
  std::map<int64_t, size_t> index;
  for (size_t i = 0; i < ds.images.size(); ++i) index[ds.images[i].id] = i;
  std::vector<Sample> out;
  out.reserve(ds.instances.size());
  for (const auto& inst : ds.instances) out.push_back(make_sample(images[index.at(inst.image_id)], inst, crop));
  return out;
}

Tensor stack_images(const std::vector<Sample>& samples, const std::vector<size_t>& indices) {
  if (indices.empty()) throw ShapeError("stack_images: empty batch");
  const Shape& s = samples[indices[0]].image.shape();
  std::vector<float> data;
  data.reserve(indices.size() * static_cast<size_t>(shape_numel(s)));
  for (size_t i : indices) {
    const Tensor& t = samples[i].image;
    if (t.shape() != s) throw ShapeError("stack_images: samples differ in shape");
    data.insert(data.end(), t.vec().begin(), t.vec().end());
  }
  return Tensor::from_data({static_cast<int64_t>(indices.size()), s[0], s[1], s[2]}, std::move(data));
}

Adam::Adam(const ParamStore& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, t] : params.entries()) {
    m_.emplace_back(t.vec().size(), 0.0f);
    v_.emplace_back(t.vec().size(), 0.0f);
  }
}

void Adam::step(ParamStore& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  NamedTensors entries = params.entries();  // handles share storage
  for (size_t i = 0; i < entries.size(); ++i) {
    Tensor& p = entries[i].second;
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < w.size(); ++j) {
      m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
      v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j]);
      const double mhat = m[j] / c1, vhat = v[j] / c2;
      w[j] = static_cast<float>(w[j] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

double warmup_lr(double lr, int iter, int warmup) {
  if (warmup <= 0 || iter >= warmup) return lr;
  return lr * static_cast<double>(iter + 1) / static_cast<double>(warmup);
}

namespace {

TargetBatch gather_targets(const std::vector<Sample>& samples, const std::vector<size_t>& idx) {
  TargetBatch tb;
  for (size_t i : idx) tb.push_back(samples[i].targets);
  return tb;
}

std::vector<std::vector<size_t>> chunks(size_t n, int batch) {
  std::vector<std::vector<size_t>> out;
  for (size_t i = 0; i < n; i += static_cast<size_t>(batch)) {
    std::vector<size_t> c;
    for (size_t j = i; j < std::min(n, i + static_cast<size_t>(batch)); ++j) c.push_back(j);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

LossTerms evaluate_loss_terms(const PoseModel& model, const std::vector<Sample>& samples, int batch) {
  NoGradGuard no_grad;
  double ce = 0.0, h = 0.0;
  int64_t visible = 0;
  for (const auto& idx : chunks(samples.size(), std::max(1, batch))) {
    const SimccLogits lg = model.forward(stack_images(samples, idx), NormMode::kEval);
    const SimccLoss l = simcc_loss(lg.x, lg.y, gather_targets(samples, idx), model.config().head);
    ce += l.cross_entropy * l.visible;
    h += l.target_entropy * l.visible;
    visible += l.visible;
  }
  LossTerms t;
  if (visible == 0) return t;
  t.cross_entropy = ce / static_cast<double>(visible);
  t.label_entropy = h / static_cast<double>(visible);
  t.kl = (ce - h) / static_cast<double>(visible);
  return t;
}

double evaluate_loss(const PoseModel& model, const std::vector<Sample>& samples, int batch) {
  return evaluate_loss_terms(model, samples, batch).kl;
}

std::vector<InstancePrediction> predict(const PoseModel& model, const std::vector<Sample>& samples, int batch) {
  NoGradGuard no_grad;
  std::vector<InstancePrediction> out;
  for (const auto& idx : chunks(samples.size(), std::max(1, batch))) {
    const SimccLogits lg = model.forward(stack_images(samples, idx), NormMode::kEval);
    const auto decoded = simcc_decode(lg.x, lg.y, model.config().head);
    for (size_t b = 0; b < idx.size(); ++b) {
      InstancePrediction p;
      double total = 0.0;
      for (const auto& kp : decoded[b]) {
        Point2 q;
        samples[idx[b]].to_image.apply(kp.x, kp.y, q.x, q.y);
        p.keypoints.push_back(q);
        p.keypoint_scores.push_back(kp.score);
        total += kp.score;
      }
      p.score = decoded[b].empty() ? 0.0 : total / static_cast<double>(decoded[b].size());
      out.push_back(std::move(p));
    }
  }
  return out;
}

double pck_at(const std::vector<InstancePrediction>& preds, const std::vector<Sample>& samples, double alpha) {
  PckCounter c;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].instance.num_visible() > 0) c.add(preds[i].keypoints, samples[i].instance, alpha);
  }
  return c.value();
}

TrainResult train_model(PoseModel& model, const std::vector<Sample>& train, const std::vector<Sample>& heldout,
                        const TrainOptions& opt, const std::function<void(const LossRecord&)>& on_step,
                        const std::vector<Image>* raw, const Dataset* raw_dataset) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (opt.iters < 0) throw std::invalid_argument("iters must be >= 0");
  if (opt.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (!(opt.lr > 0.0) || !std::isfinite(opt.lr)) throw std::invalid_argument("learning rate must be positive");
  if (opt.augment && (!raw || !raw_dataset)) throw std::invalid_argument("augmentation needs the raw images");
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  const LossTerms before = evaluate_loss_terms(model, train, opt.batch);
  res.initial_loss = before.kl;
  res.initial_cross_entropy = before.cross_entropy;
  res.label_entropy = before.label_entropy;
  if (!heldout.empty()) res.pck_untrained = pck_at(predict(model, heldout, opt.batch), heldout, 0.1);

  std::map<int64_t, size_t> image_index;
  if (raw_dataset) {
    for (size_t i = 0; i < raw_dataset->images.size(); ++i) image_index[raw_dataset->images[i].id] = i;
  }
  const CropSpec crop{model.config().input_width, model.config().input_height};
  const int warmup = static_cast<int>(std::floor(opt.warmup_fraction * opt.iters));
  Adam adam(model.params());
  std::vector<size_t> order;
  size_t cursor = 0;
  uint64_t epoch = 0;
  for (int it = 0; it < opt.iters; ++it) {
    std::vector<size_t> idx;
    while (idx.size() < static_cast<size_t>(opt.batch) && idx.size() < train.size()) {
      if (cursor >= order.size()) {
        order.resize(train.size());
        std::iota(order.begin(), order.end(), size_t{0});
        Rng rng(derive_seed(opt.seed, epoch++));
        for (size_t i = order.size(); i > 1; --i) {
          std::uniform_int_distribution<size_t> pick(0, i - 1);
          std::swap(order[i - 1], order[pick(rng)]);
        }
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    const uint64_t batch_seed = derive_seed(opt.seed ^ 0x5eedULL, static_cast<uint64_t>(it));
    const double lr = warmup_lr(opt.lr, it, warmup);
    try {
      const std::vector<Sample>* source = &train;
      std::vector<Sample> augmented;
      std::vector<size_t> use = idx;
      if (opt.augment) {
        for (size_t j = 0; j < idx.size(); ++j) {
          const KeypointInstance& inst = raw_dataset->instances[idx[j]];
          const Augmented a = augment((*raw)[image_index.at(inst.image_id)], inst,
                                      derive_seed(batch_seed, j), opt.policy);
          augmented.push_back(make_sample(a.image, a.instance, crop));
          use[j] = j;
        }
        source = &augmented;
      }
      model.params().zero_grad();
      const SimccLogits lg = model.forward(stack_images(*source, use), NormMode::kTrain);
      const SimccLoss loss = simcc_loss(lg.x, lg.y, gather_targets(*source, use), model.config().head);
      res.clamped_labels += loss.clamped;
      if (loss.visible > 0) loss.loss.backward();
      adam.step(model.params(), lr);
      const LossRecord rec{it + 1, lr, loss.loss.item()};
      res.log.push_back(rec);
      if (on_step) on_step(rec);
    } catch (const NumericError& e) {
      throw TrainingDiverged(std::string("non-finite value at iteration ") + std::to_string(it + 1) + ": " +
                                 e.what(),
                             it + 1, batch_seed, idx);
    }
  }
  model.params().zero_grad();
  const LossTerms after = evaluate_loss_terms(model, train, opt.batch);
  res.final_loss = after.kl;
  res.final_cross_entropy = after.cross_entropy;
  if (!heldout.empty()) res.pck_trained = pck_at(predict(model, heldout, opt.batch), heldout, 0.1);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace cattlepose
