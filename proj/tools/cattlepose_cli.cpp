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

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cattlepose/checkpoint.hpp"
#include "cattlepose/config.hpp"
#include "cattlepose/dataset.hpp"
#include "cattlepose/metrics.hpp"
#include "cattlepose/model.hpp"
#include "cattlepose/parallel.hpp"
#include "cattlepose/profiler.hpp"
#include "cattlepose/render.hpp"
#include "cattlepose/synth.hpp"
#include "cattlepose/train.hpp"

#ifndef CATTLEPOSE_VERSION
#define CATTLEPOSE_VERSION "0.1.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cattlepose;

namespace {

// Exit codes: 0 success, 1 user error, 2 internal invariant violation.
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One manifest per artifact-writing command, listing outputs in write order.
class Manifest {
 public:
  Manifest(std::string command, std::string invocation)
      : command_(std::move(command)), invocation_(std::move(invocation)), started_(utc_now()) {}

  void set_seed(uint64_t seed) { seed_ = seed; }
  void set_config(const ModelConfig& cfg) { config_hash_ = config_hash(cfg); }
  void add_output(const std::string& name) { outputs_.push_back(name); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command_;
    j["invocation"] = invocation_;
    j["version"] = CATTLEPOSE_VERSION;
    j["seed"] = seed_ ? json(*seed_) : json(nullptr);
    j["config_hash"] = config_hash_.empty() ? json(nullptr) : json(config_hash_);
    j["outputs"] = outputs_;
    j["started_at"] = started_;
    j["finished_at"] = utc_now();
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_, invocation_, started_;
  std::optional<uint64_t> seed_;
  std::string config_hash_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

struct ModelFlags {
  std::string config_path;
  std::vector<std::string> toggles;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--config", f.config_path, "model config file (default: reference desk layout)");
  cmd->add_option("--toggle", f.toggles, "disable a block: no-sfe, no-ra, no-sc2head (repeatable)");
}

ModelConfig resolve_config(const ModelFlags& f) {
  ModelConfig cfg = f.config_path.empty() ? ModelConfig::reference() : load_model_config(f.config_path);
  for (const auto& t : f.toggles) {
    if (t == "no-sfe") {
      cfg.use_sfe = false;
    } else if (t == "no-ra") {
      cfg.use_ra = false;
    } else if (t == "no-sc2head") {
      cfg.use_sc2head = false;
    } else {
      throw UserError("unknown toggle '" + t + "' (expected no-sfe, no-ra or no-sc2head)");
    }
  }
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UserError("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

std::vector<Image> load_images(const Dataset& ds, const std::string& dir) {
  std::vector<Image> images;
  for (const auto& info : ds.images) images.push_back(load_dataset_image(dir, info));
  return images;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  ModelFlags model;
  int synthetic = 0;
  std::string data_dir;
  uint64_t seed = 7;
  int iters = 200;
  double lr = 1e-3;
  int batch = 8;
  int heldout = 32;
  bool augment = false;
  std::string out;
};

int cmd_train(const TrainArgs& a, const std::string& invocation) {
  const ModelConfig cfg = resolve_config(a.model);
  if ((a.synthetic > 0) == !a.data_dir.empty()) throw UserError("give exactly one of --synthetic N or --data DIR");
  if (a.iters < 0) throw UserError("--iters must be >= 0");
  if (a.batch < 1) throw UserError("--batch must be >= 1");
  if (!(a.lr > 0.0)) throw UserError("--lr must be positive");
  if (a.heldout < 1) throw UserError("--heldout must be >= 1");
  const fs::path out = prepare_out(a.out);
  Manifest manifest("train", invocation);
  manifest.set_seed(a.seed);
  manifest.set_config(cfg);

  // Streams: 1 training data, 2 held-out data, 3 model init.
  Dataset train_ds;
  std::vector<Image> train_images;
  if (a.synthetic > 0) {
    SynthDataset s = synth_dataset(a.synthetic, derive_seed(a.seed, 1));
    train_ds = std::move(s.annotations);
    train_images = std::move(s.images);
  } else {
    train_ds = load_annotations((fs::path(a.data_dir) / "annotations.json").string());
    train_images = load_images(train_ds, (fs::path(a.data_dir) / "images").string());
  }
  const SynthDataset held = synth_dataset(a.heldout, derive_seed(a.seed, 2));
  const CropSpec crop{cfg.input_width, cfg.input_height};
  const std::vector<Sample> train = make_samples(train_ds, train_images, crop);
  const std::vector<Sample> heldout = make_samples(held.annotations, held.images, crop);

  PoseModel model(cfg, derive_seed(a.seed, 3));
  TrainOptions opt;
  opt.iters = a.iters;
  opt.lr = a.lr;
  opt.batch = a.batch;
  opt.seed = a.seed;
  opt.augment = a.augment;

  std::ostringstream csv;
  csv << "iter,lr,loss\n";
  TrainResult res;
  try {
    res = train_model(
        model, train, heldout, opt,
        [&](const LossRecord& r) {
          char line[96];
          std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", r.iter, r.lr, r.loss);
          csv << line;
          if (r.iter % 20 == 0 || r.iter == a.iters) std::cerr << "iter " << r.iter << " loss " << r.loss << "\n";
        },
        &train_images, &train_ds);
  } catch (const TrainingDiverged& e) {
    json dump = {{"error", e.what()}, {"iteration", e.iter}, {"batch_seed", e.batch_seed}, {"sample_indices", e.indices}};
    write_text(out / "diverged.json", dump.dump(2) + "\n");
    manifest.add_output("diverged.json");
    manifest.write(out);
    std::cerr << "error: " << e.what() << " (batch seed " << e.batch_seed << ", see diverged.json)\n";
    return kExitInternal;
  }

  model.save((out / "model.ckpt").string());
  manifest.add_output("model.ckpt");
  manifest.add_output(fs::path(PoseModel::buffers_path("model.ckpt")).string());
  save_model_config((out / "config.cfg").string(), cfg);
  manifest.add_output("config.cfg");
  write_text(out / "loss.csv", csv.str());
  manifest.add_output("loss.csv");
  json report = {{"iters", a.iters},
                 {"batch", a.batch},
                 {"lr", a.lr},
                 {"seed", a.seed},
                 {"train_instances", train.size()},
                 {"heldout_instances", heldout.size()},
                 {"initial_loss", res.initial_loss},
                 {"final_loss", res.final_loss},
                 {"loss_ratio", res.initial_loss > 0 ? res.final_loss / res.initial_loss : 0.0},
                 {"initial_cross_entropy", res.initial_cross_entropy},
                 {"final_cross_entropy", res.final_cross_entropy},
                 {"label_entropy", res.label_entropy},
                 {"pck_0.1_untrained", res.pck_untrained},
                 {"pck_0.1_trained", res.pck_trained},
                 {"clamped_labels", res.clamped_labels},
                 {"params", model.params().scalar_count()}};
  write_text(out / "train_report.json", report.dump(2) + "\n");
  manifest.add_output("train_report.json");
  std::cerr << "trained in " << res.seconds << " s\n";
  manifest.write(out);
  std::printf("initial_loss %.6f\nfinal_loss %.6f\nloss_ratio %.6f\npck@0.1 untrained %.4f trained %.4f\n",
              res.initial_loss, res.final_loss, res.initial_loss > 0 ? res.final_loss / res.initial_loss : 0.0,
              res.pck_untrained, res.pck_trained);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  ModelFlags model;
  std::string checkpoint, results, annotations, images, out;
  int max_dets = 20;
  int batch = 8;
};

int cmd_eval(const EvalArgs& a, const std::string& invocation) {
  if (a.annotations.empty()) throw UserError("--annotations is required");
  if (a.checkpoint.empty() == a.results.empty()) throw UserError("give exactly one of --checkpoint or --results");
  const fs::path out = prepare_out(a.out);
  Manifest manifest("eval", invocation);
  const Dataset ds = load_annotations(a.annotations);
  for (const auto& c : ds.categories) {
    if (!c.keypoints.empty() && c.keypoints.size() != static_cast<size_t>(kNumKeypoints)) {
      throw UserError("skeleton mismatch: category has " + std::to_string(c.keypoints.size()) + " keypoints");
    }
  }
  std::vector<Detection> dets;
  if (!a.results.empty()) {
    dets = parse_results(read_text(a.results));
  } else {
    if (a.images.empty()) throw UserError("--images is required with --checkpoint");
    const ModelConfig cfg = resolve_config(a.model);
    manifest.set_config(cfg);
    PoseModel model(cfg, 0);
    model.load(a.checkpoint);
    const std::vector<Image> images = load_images(ds, a.images);
    // Top-down with ground-truth boxes: one crop per annotated instance.
    const std::vector<Sample> samples = make_samples(ds, images, CropSpec{cfg.input_width, cfg.input_height});
    const auto preds = predict(model, samples, a.batch);
    for (size_t i = 0; i < samples.size(); ++i) {
      dets.push_back({samples[i].instance.image_id, samples[i].instance.category_id, preds[i].keypoints, preds[i].score});
    }
    write_text(out / "results.json", serialize_results(dets));
    manifest.add_output("results.json");
  }
  EvalParams params = EvalParams::coco();
  params.max_dets = a.max_dets;
  const MetricsReport rep = ap_ar(dets, ds.instances, SkeletonSpec::cattle(), params);
  write_text(out / "metrics.txt", rep.to_text());
  write_text(out / "metrics.json", rep.to_json());
  manifest.add_output("metrics.txt");
  manifest.add_output("metrics.json");
  manifest.write(out);
  std::cout << rep.to_text();
  return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  ModelFlags model;
  int batch = 1;
  int iters = 20;
  int warmup = 2;
  int threads = 0;
  uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchArgs& a, const std::string& invocation) {
  const ModelConfig cfg = resolve_config(a.model);
  if (a.batch < 1 || a.iters < 10 || a.warmup < 1) {
    throw UserError("bench needs --batch >= 1, --iters >= 10 and --warmup >= 1");
  }
  PoseModel model(cfg, a.seed);
  BenchOptions opt;
  opt.batch = a.batch;
  opt.timed_iters = a.iters;
  opt.warmup_iters = a.warmup;
  opt.threads = a.threads > 0 ? a.threads : num_threads();
  opt.seed = a.seed;
  const BenchReport rep = bench_inference(model, opt);
  std::printf("config %s | seed %llu | threads %d | batch %d | cpu %s\n", rep.config_hash.c_str(),
              static_cast<unsigned long long>(rep.seed), rep.threads, rep.batch, rep.cpu_model.c_str());
  std::printf("samples %zu | latency mean %.3f ms | fps_mean %.2f | fps_p50 %.2f | fps_p95 %.2f\n",
              rep.latency_ms.size(), rep.latency_mean_ms, rep.fps_mean, rep.fps_p50, rep.fps_p95);
  if (!a.out.empty()) {
    const fs::path out = prepare_out(a.out);
    Manifest manifest("bench", invocation);
    manifest.set_seed(a.seed);
    manifest.set_config(cfg);
    write_text(out / "bench.json", rep.to_json());
    manifest.add_output("bench.json");
    manifest.write(out);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ProfileArgs {
  ModelFlags model;
  std::string resolution;
  bool json_out = false;
  std::string out;
};

int cmd_profile(const ProfileArgs& a, const std::string& invocation) {
  const ModelConfig cfg = resolve_config(a.model);
  int w = cfg.input_width, h = cfg.input_height;
  if (!a.resolution.empty()) {
    const auto x = a.resolution.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument(a.resolution);
      size_t used_w = 0, used_h = 0;
      w = std::stoi(a.resolution.substr(0, x), &used_w);
      h = std::stoi(a.resolution.substr(x + 1), &used_h);
      if (used_w != x || used_h != a.resolution.size() - x - 1) throw std::invalid_argument(a.resolution);
    } catch (const std::exception&) {
      throw UserError("--resolution must look like 256x192 (width x height)");
    }
  }
  const CostReport rep = count_macs(cfg, w, h);
  std::cout << (a.json_out ? rep.to_json() : rep.to_text());
  if (!a.out.empty()) {
    const fs::path out = prepare_out(a.out);
    Manifest manifest("profile", invocation);
    manifest.set_config(cfg);
    write_text(out / "cost.txt", rep.to_text());
    write_text(out / "cost.json", rep.to_json());
    manifest.add_output("cost.txt");
    manifest.add_output("cost.json");
    manifest.write(out);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string annotations, split, out;
};

int cmd_stats(const StatsArgs& a, const std::string& invocation) {
  if (a.annotations.empty()) throw UserError("--annotations is required");
  const Dataset ds = load_annotations(a.annotations);
  std::optional<SplitAssignment> split;
  if (!a.split.empty()) split = parse_split_file(read_text(a.split));
  const VisibilityStats stats = visibility_stats(ds, split ? &*split : nullptr);
  const std::string table = format_visibility_table(stats);
  std::cout << table;
  if (!a.out.empty()) {
    const fs::path out = prepare_out(a.out);
    Manifest manifest("stats", invocation);
    json rows = json::array();
    for (const auto& r : stats.rows) {
      rows.push_back({{"split", r.split},
                      {"invisible", r.counts[0]},
                      {"partially_visible", r.counts[1]},
                      {"visible", r.counts[2]},
                      {"total", r.total}});
    }
    write_text(out / "stats.txt", table);
    write_text(out / "stats.json", rows.dump(2) + "\n");
    manifest.add_output("stats.txt");
    manifest.add_output("stats.json");
    manifest.write(out);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct VizArgs {
  ModelFlags model;
  std::string checkpoint, annotations, images, out;
};

int cmd_viz(const VizArgs& a, const std::string& invocation) {
  if (a.annotations.empty() || a.images.empty()) throw UserError("--annotations and --images are required");
  const fs::path out = prepare_out(a.out);
  Manifest manifest("viz", invocation);
  const Dataset ds = load_annotations(a.annotations);
  const SkeletonSpec skeleton = SkeletonSpec::cattle();
  std::optional<PoseModel> model;
  if (!a.checkpoint.empty()) {
    const ModelConfig cfg = resolve_config(a.model);
    manifest.set_config(cfg);
    model.emplace(cfg, 0);
    model->load(a.checkpoint);
  }
  int rendered = 0, missing = 0;
  for (const auto& info : ds.images) {
    Image img;
    try {
      img = load_dataset_image(a.images, info);
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping image " << info.id << ": " << e.what() << "\n";
      ++missing;
      continue;
    }
    std::vector<KeypointInstance> insts;
    for (const auto& inst : ds.instances) {
      if (inst.image_id == info.id) insts.push_back(inst);
    }
    std::vector<InstancePrediction> preds;
    if (model && !insts.empty()) {
      const CropSpec crop{model->config().input_width, model->config().input_height};
      std::vector<Sample> samples;
      for (const auto& inst : insts) samples.push_back(make_sample(img, inst, crop));
      preds = predict(*model, samples);
      NoGradGuard no_grad;
      for (size_t i = 0; i < samples.size(); ++i) {
        const SimccLogits lg = model->forward(stack_images(samples, {i}), NormMode::kEval);
        const std::string name = "heat_" + std::to_string(insts[i].id) + ".ppm";
        write_pnm((out / name).string(), render_heat_strips(lg.x, lg.y, 0));
        manifest.add_output(name);
      }
    }
    const std::string name = "overlay_" + std::to_string(info.id) + ".ppm";
    write_pnm((out / name).string(), render_overlay(img, insts, skeleton, model ? &preds : nullptr));
    manifest.add_output(name);
    ++rendered;
  }
  manifest.write(out);
  if (rendered == 0 && missing > 0) {
    std::cerr << "error: no image could be read\n";
    return kExitUser;
  }
  std::cout << "rendered " << rendered << " image(s), skipped " << missing << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  int count = 0;
  uint64_t seed = 7;
  std::string out;
};

int cmd_synth(const SynthArgs& a, const std::string& invocation) {
  if (a.count < 1) throw UserError("--synthetic must be >= 1");
  const fs::path out = prepare_out(a.out);
  Manifest manifest("synth", invocation);
  manifest.set_seed(a.seed);
  const SynthDataset data = synth_dataset(a.count, a.seed);
  write_dataset_dir(out.string(), data);
  manifest.add_output("annotations.json");
  for (const auto& info : data.annotations.images) manifest.add_output("images/" + info.file_name);
  manifest.write(out);
  std::cout << "wrote " << data.annotations.instances.size() << " instance(s) in " << data.images.size()
            << " image(s)\n";
  return 0;
}

struct SplitArgs {
  std::string annotations, ratios = "8:1:1", out;
  uint64_t seed = 7;
};

int cmd_split(const SplitArgs& a, const std::string& invocation) {
  if (a.annotations.empty()) throw UserError("--annotations is required");
  std::array<double, 3> r{};
  if (std::sscanf(a.ratios.c_str(), "%lf:%lf:%lf", &r[0], &r[1], &r[2]) != 3) {
    throw UserError("--ratios must look like 8:1:1");
  }
  const fs::path out = prepare_out(a.out);
  Manifest manifest("split", invocation);
  manifest.set_seed(a.seed);
  const Dataset ds = load_annotations(a.annotations);
  write_text(out / "split.tsv", format_split_file(split_dataset(ds, r, a.seed)));
  manifest.add_output("split.tsv");
  manifest.write(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cattlepose: lightweight top-down cattle pose estimation toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: FSMC_THREADS or 1)");

  std::string invocation;
  for (int i = 0; i < argc; ++i) invocation += (i ? " " : "") + std::string(argv[i]);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train on synthetic or annotated data");
  add_model_flags(c_train, train.model);
  c_train->add_option("--synthetic", train.synthetic, "generate N synthetic training instances");
  c_train->add_option("--data", train.data_dir, "directory with annotations.json and images/");
  c_train->add_option("--seed", train.seed, "seed");
  c_train->add_option("--iters", train.iters, "optimizer steps");
  c_train->add_option("--lr", train.lr, "peak learning rate");
  c_train->add_option("--batch", train.batch, "batch size");
  c_train->add_option("--heldout", train.heldout, "held-out synthetic instances for PCK");
  c_train->add_flag("--augment", train.augment, "apply random scale/rotation/shift/occlusion");
  c_train->add_option("--out", train.out, "output directory")->required();
  c_train->add_option("--threads", threads, "worker threads");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "AP/AR evaluation with ground-truth boxes");
  add_model_flags(c_eval, eval.model);
  c_eval->add_option("--checkpoint", eval.checkpoint, "model checkpoint");
  c_eval->add_option("--results", eval.results, "COCO results JSON to score instead of a model");
  c_eval->add_option("--annotations", eval.annotations, "COCO keypoint annotations")->required();
  c_eval->add_option("--images", eval.images, "image directory");
  c_eval->add_option("--max-dets", eval.max_dets, "detections kept per image");
  c_eval->add_option("--batch", eval.batch, "inference batch size");
  c_eval->add_option("--out", eval.out, "output directory")->required();
  c_eval->add_option("--threads", threads, "worker threads");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "inference throughput benchmark");
  add_model_flags(c_bench, bench.model);
  c_bench->add_option("--batch", bench.batch, "batch size");
  c_bench->add_option("--iters", bench.iters, "timed iterations (>= 10)");
  c_bench->add_option("--warmup", bench.warmup, "warmup iterations (>= 1)");
  c_bench->add_option("--seed", bench.seed, "seed for weights and input");
  c_bench->add_option("--out", bench.out, "output directory");
  c_bench->add_option("--threads", threads, "worker threads");

  ProfileArgs profile;
  auto* c_profile = app.add_subcommand("profile", "per-layer parameter and MAC table");
  add_model_flags(c_profile, profile.model);
  c_profile->add_option("--resolution", profile.resolution, "input WIDTHxHEIGHT (default from config)");
  c_profile->add_flag("--json", profile.json_out, "print JSON instead of the text table");
  c_profile->add_option("--out", profile.out, "output directory");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "keypoint visibility statistics");
  c_stats->add_option("--annotations", stats.annotations, "COCO keypoint annotations")->required();
  c_stats->add_option("--split", stats.split, "split file (image_id<TAB>split)");
  c_stats->add_option("--out", stats.out, "output directory");

  VizArgs viz;
  auto* c_viz = app.add_subcommand("viz", "render skeleton overlays and heat strips");
  add_model_flags(c_viz, viz.model);
  c_viz->add_option("--checkpoint", viz.checkpoint, "model checkpoint (optional)");
  c_viz->add_option("--annotations", viz.annotations, "COCO keypoint annotations")->required();
  c_viz->add_option("--images", viz.images, "image directory")->required();
  c_viz->add_option("--out", viz.out, "output directory")->required();
  c_viz->add_option("--threads", threads, "worker threads");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic dataset");
  c_synth->add_option("--synthetic", synth.count, "instance count")->required();
  c_synth->add_option("--seed", synth.seed, "seed");
  c_synth->add_option("--out", synth.out, "output directory")->required();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "image-level train/val/test split");
  c_split->add_option("--annotations", split.annotations, "COCO keypoint annotations")->required();
  c_split->add_option("--ratios", split.ratios, "train:val:test ratios");
  c_split->add_option("--seed", split.seed, "seed");
  c_split->add_option("--out", split.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUser;
  }

  try {
    if (threads < 0) throw UserError("--threads must be >= 1");
    if (threads > 0) set_num_threads(threads);
    bench.threads = threads;
    if (*c_train) return cmd_train(train, invocation);
    if (*c_eval) return cmd_eval(eval, invocation);
    if (*c_bench) return cmd_bench(bench, invocation);
    if (*c_profile) return cmd_profile(profile, invocation);
    if (*c_stats) return cmd_stats(stats, invocation);
    if (*c_viz) return cmd_viz(viz, invocation);
    if (*c_synth) return cmd_synth(synth, invocation);
    if (*c_split) return cmd_split(split, invocation);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUser;
  } catch (const DatasetError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitUser;
  } catch (const ImageError& e) {
    std::cerr << "image error: " << e.what() << "\n";
    return kExitUser;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitUser;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kExitUser;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUser;
  } catch (const NumericError& e) {
    std::cerr << "internal error (non-finite value): " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
