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

#include "cattlepose/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cattlepose/params.hpp"

namespace cattlepose {

using json = nlohmann::json;

SkeletonSpec SkeletonSpec::cattle() {
  SkeletonSpec s;
  s.names = {"head_top",         "neck",           "spine_mid",     "tail_root",
             "l_front_shoulder", "l_front_elbow",  "l_front_hoof",  "r_front_shoulder",
             "r_front_elbow",    "r_front_hoof",   "l_hind_hip",    "l_hind_knee",
             "l_hind_hoof",      "r_hind_hip",     "r_hind_knee",   "r_hind_hoof"};
  s.edges = {{0, 1},  {1, 2},  {2, 3},  {1, 4},   {4, 5},   {5, 6},   {1, 7},  {7, 8},
             {8, 9},  {3, 10}, {10, 11}, {11, 12}, {3, 13}, {13, 14}, {14, 15}};
  s.sigmas.assign(kNumKeypoints, kDefaultKeypointSigma);
  return s;
}

int SkeletonSpec::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

void SkeletonSpec::validate() const {
  if (names.size() != static_cast<size_t>(kNumKeypoints)) {
    throw DatasetError("skeleton must have " + std::to_string(kNumKeypoints) + " keypoints, has " +
                       std::to_string(names.size()));
  }
  if (sigmas.size() != names.size()) throw DatasetError("skeleton sigma count mismatch");
  for (size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) {
      throw DatasetError("sigma for " + names[i] + " must be positive");
    }
  }
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= size() || b >= size()) throw DatasetError("skeleton edge out of range");
  }
}

void SkeletonSpec::load_sigmas(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    std::string key = line.substr(0, eq), value = eq == std::string::npos ? "" : line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(key);
    trim(value);
    const int idx = index_of(key);
    if (eq == std::string::npos || idx < 0) {
      throw DatasetError("sigma file line " + std::to_string(lineno) + ": unknown keypoint '" + key + "'");
    }
    try {
      size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      sigmas[static_cast<size_t>(idx)] = v;
    } catch (const std::exception&) {
      throw DatasetError("sigma file line " + std::to_string(lineno) + ": bad number '" + value + "'");
    }
  }
  validate();
}

int KeypointInstance::num_visible() const {
  int n = 0;
  for (const auto& k : keypoints) n += k.v > 0;
  return n;
}

double KeypointInstance::scale_area() const {
  if (area && *area > 0.0) return *area;
  return bbox.w * bbox.h;
}

const ImageInfo& Dataset::image(int64_t id) const {
  for (const auto& img : images) {
    if (img.id == id) return img;
  }
  throw DatasetError("no image with id " + std::to_string(id));
}

bool Dataset::has_image(int64_t id) const {
  return std::any_of(images.begin(), images.end(), [id](const ImageInfo& i) { return i.id == id; });
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DatasetError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw DatasetError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw DatasetError(where + ": non-finite number");
  return d;
}

int64_t integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw DatasetError(where + ": expected an integer");
  return v.get<int64_t>();
}

}  // namespace

Dataset parse_annotations(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DatasetError(std::string("malformed annotation JSON: ") + e.what());
  }
  if (!root.is_object()) throw DatasetError("annotation file must be a JSON object");
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!root.contains(key) || !root[key].is_array()) {
      throw DatasetError(std::string("annotation file needs a '") + key + "' array");
    }
  }
  Dataset ds;
  std::map<int64_t, size_t> image_index;
  for (size_t i = 0; i < root["images"].size(); ++i) {
    const json& j = root["images"][i];
    const std::string where = "image " + std::to_string(i);
    ImageInfo info;
    info.id = integer(field(j, "id", where), where + " id");
    const json& name = field(j, "file_name", where);
    if (!name.is_string()) throw DatasetError(where + ": file_name must be a string");
    info.file_name = name.get<std::string>();
    info.width = static_cast<int>(integer(field(j, "width", where), where + " width"));
    info.height = static_cast<int>(integer(field(j, "height", where), where + " height"));
    if (info.width <= 0 || info.height <= 0) throw DatasetError(where + ": non-positive size");
    if (!image_index.emplace(info.id, ds.images.size()).second) {
      throw DatasetError(where + ": duplicate image id " + std::to_string(info.id));
    }
    ds.images.push_back(std::move(info));
  }
  for (size_t i = 0; i < root["categories"].size(); ++i) {
    const json& j = root["categories"][i];
    const std::string where = "category " + std::to_string(i);
    Category c;
    c.id = integer(field(j, "id", where), where + " id");
    if (j.contains("name") && j["name"].is_string()) c.name = j["name"].get<std::string>();
    if (j.contains("keypoints")) {
      for (const auto& k : j["keypoints"]) {
        if (!k.is_string()) throw DatasetError(where + ": keypoint names must be strings");
        c.keypoints.push_back(k.get<std::string>());
      }
      if (c.keypoints.size() != static_cast<size_t>(kNumKeypoints)) {
        throw DatasetError(where + ": skeleton has " + std::to_string(c.keypoints.size()) +
                           " keypoints, expected " + std::to_string(kNumKeypoints));
      }
    }
    if (j.contains("skeleton")) {
      for (const auto& e : j["skeleton"]) {
        if (!e.is_array() || e.size() != 2) throw DatasetError(where + ": skeleton edges are pairs");
        c.skeleton.emplace_back(static_cast<int>(integer(e[0], where)), static_cast<int>(integer(e[1], where)));
      }
    }
    ds.categories.push_back(std::move(c));
  }
  const auto& anns = root["annotations"];
  for (size_t i = 0; i < anns.size(); ++i) {
    const json& j = anns[i];
    const std::string where = "annotation " + std::to_string(i);
    KeypointInstance inst;
    inst.id = j.contains("id") ? integer(j["id"], where + " id") : static_cast<int64_t>(i + 1);
    inst.image_id = integer(field(j, "image_id", where), where + " image_id");
    auto img = image_index.find(inst.image_id);
    if (img == image_index.end()) {
      throw DatasetError(where + " (id " + std::to_string(inst.id) + "): image_id " +
                         std::to_string(inst.image_id) + " does not exist");
    }
    if (j.contains("category_id")) inst.category_id = integer(j["category_id"], where + " category_id");
    const json& bbox = field(j, "bbox", where);
    if (!bbox.is_array() || bbox.size() != 4) throw DatasetError(where + ": bbox must have 4 numbers");
    inst.bbox = {number(bbox[0], where + " bbox"), number(bbox[1], where + " bbox"),
                 number(bbox[2], where + " bbox"), number(bbox[3], where + " bbox")};
    if (!(inst.bbox.w > 0 && inst.bbox.h > 0)) throw DatasetError(where + ": bbox w and h must be > 0");
    const json& kps = field(j, "keypoints", where);
    if (!kps.is_array() || kps.size() != 3 * static_cast<size_t>(kNumKeypoints)) {
      throw DatasetError(where + " (id " + std::to_string(inst.id) + "): keypoints array has length " +
                         std::to_string(kps.is_array() ? kps.size() : 0) + ", expected " +
                         std::to_string(3 * kNumKeypoints));
    }
    const ImageInfo& info = ds.images[img->second];
    for (int k = 0; k < kNumKeypoints; ++k) {
      Keypoint& kp = inst.keypoints[static_cast<size_t>(k)];
      kp.x = number(kps[3 * k], where + " keypoint x");
      kp.y = number(kps[3 * k + 1], where + " keypoint y");
      const double v = number(kps[3 * k + 2], where + " visibility");
      if (v != 0.0 && v != 1.0 && v != 2.0) {
        throw DatasetError(where + ": keypoint " + std::to_string(k) + " visibility must be 0, 1 or 2");
      }
      kp.v = static_cast<int>(v);
      if (kp.v > 0 && (kp.x < 0 || kp.y < 0 || kp.x >= info.width || kp.y >= info.height)) {
        throw DatasetError(where + ": labeled keypoint " + std::to_string(k) + " lies outside image " +
                           std::to_string(info.id));
      }
    }
    if (j.contains("area") && !j["area"].is_null()) inst.area = number(j["area"], where + " area");
    ds.instances.push_back(inst);
  }
  return ds;
}

std::string serialize_annotations(const Dataset& ds) {
  json root;
  root["images"] = json::array();
  for (const auto& img : ds.images) {
    root["images"].push_back(
        {{"id", img.id}, {"file_name", img.file_name}, {"width", img.width}, {"height", img.height}});
  }
  root["annotations"] = json::array();
  for (const auto& inst : ds.instances) {
    json kps = json::array();
    for (const auto& k : inst.keypoints) {
      kps.push_back(k.x);
      kps.push_back(k.y);
      kps.push_back(k.v);
    }
    json a = {{"id", inst.id},
              {"image_id", inst.image_id},
              {"category_id", inst.category_id},
              {"bbox", {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h}},
              {"keypoints", kps},
              {"num_keypoints", inst.num_visible()},
              {"iscrowd", 0}};
    if (inst.area) a["area"] = *inst.area;
    root["annotations"].push_back(std::move(a));
  }
  root["categories"] = json::array();
  for (const auto& c : ds.categories) {
    json cat = {{"id", c.id}, {"name", c.name}};
    if (!c.keypoints.empty()) cat["keypoints"] = c.keypoints;
    if (!c.skeleton.empty()) {
      json sk = json::array();
      for (auto [a, b] : c.skeleton) sk.push_back({a, b});
      cat["skeleton"] = sk;
    }
    root["categories"].push_back(std::move(cat));
  }
  return root.dump(1) + "\n";
}

Dataset load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open annotation file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_annotations(ss.str());
}

void save_annotations(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write annotation file " + path);
  out << serialize_annotations(ds);
}

Dataset make_dataset_header(const SkeletonSpec& skeleton) {
  Dataset ds;
  Category c;
  c.keypoints = skeleton.names;
  for (auto [a, b] : skeleton.edges) c.skeleton.emplace_back(a + 1, b + 1);
  ds.categories.push_back(std::move(c));
  return ds;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw DatasetError("unknown split '" + name + "' (expected train, val or test)");
}

SplitAssignment split_dataset(const Dataset& ds, std::array<double, 3> ratios, uint64_t seed) {
  if (ds.images.empty()) throw DatasetError("cannot split an empty dataset");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DatasetError("split ratios must be positive");
    total += r;
  }
  const size_t n = ds.images.size();
  std::array<size_t, 3> sizes{};
  std::array<double, 3> rem{};
  size_t assigned = 0;
  for (size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratios[i] / total;
    sizes[i] = static_cast<size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return rem[a] > rem[b]; });
  for (size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];

  std::vector<int64_t> ids;
  for (const auto& img : ds.images) ids.push_back(img.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  for (size_t i = ids.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(ids[i - 1], ids[pick(rng)]);
  }
  SplitAssignment out;
  size_t pos = 0;
  for (size_t s = 0; s < 3; ++s) {
    for (size_t k = 0; k < sizes[s]; ++k) out[ids[pos++]] = static_cast<Split>(s);
  }
  return out;
}

std::string format_split_file(const SplitAssignment& split) {
  std::string out;
  for (const auto& [id, s] : split) out += std::to_string(id) + "\t" + split_name(s) + "\n";
  return out;
}

SplitAssignment parse_split_file(const std::string& text) {
  SplitAssignment out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DatasetError("split file line " + std::to_string(lineno) + ": expected image_id<TAB>split");
    }
    int64_t id;
    try {
      size_t used = 0;
      id = std::stoll(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("id");
    } catch (const std::exception&) {
      throw DatasetError("split file line " + std::to_string(lineno) + ": bad image id");
    }
    if (!out.emplace(id, parse_split(line.substr(tab + 1))).second) {
      throw DatasetError("split file line " + std::to_string(lineno) + ": image " +
                         std::to_string(id) + " listed twice");
    }
  }
  return out;
}

double VisibilityRow::percent(int v) const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[static_cast<size_t>(v)]) / total;
}

VisibilityStats visibility_stats(const Dataset& ds, const SplitAssignment* split) {
  VisibilityStats stats;
  if (!split) {
    stats.rows.push_back({"all", {}, 0});
  } else {
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) stats.rows.push_back({split_name(s), {}, 0});
  }
  for (size_t i = 0; i < ds.instances.size(); ++i) {
    const auto& inst = ds.instances[i];
    size_t row = 0;
    if (split) {
      auto it = split->find(inst.image_id);
      if (it == split->end()) {
        throw DatasetError("instance " + std::to_string(inst.id) + " (image " +
                           std::to_string(inst.image_id) + ") has no split assignment");
      }
      row = static_cast<size_t>(it->second);
    }
    for (const auto& k : inst.keypoints) {
      ++stats.rows[row].counts[static_cast<size_t>(k.v)];
      ++stats.rows[row].total;
    }
  }
  return stats;
}

std::string format_count(int64_t n) {
  std::string digits = std::to_string(n < 0 ? -n : n);
  std::string out;
  for (size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return n < 0 ? "-" + out : out;
}

std::string format_percent(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", pct);
  return buf;
}

std::string format_visibility_table(const VisibilityStats& stats) {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"split", "invisible", "partially visible", "visible", "total"});
  for (const auto& r : stats.rows) {
    std::array<std::string, 5> row;
    row[0] = r.split;
    for (int v = 0; v < 3; ++v) {
      row[static_cast<size_t>(v + 1)] =
          format_count(r.counts[static_cast<size_t>(v)]) + " (" + format_percent(r.percent(v)) + ")";
    }
    row[4] = format_count(r.total);
    cells.push_back(row);
  }
  std::array<size_t, 5> width{};
  for (const auto& row : cells) {
    for (size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (size_t c = 0; c < 5; ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      out += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    out += '\n';
  }
  return out;
}

Affine2 crop_transform(const BBox& box, const CropSpec& spec) {
  if (!(box.w > 0 && box.h > 0) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw DatasetError("degenerate bounding box for crop");
  }
  const double cx = box.x + (box.w - 1.0) / 2.0, cy = box.y + (box.h - 1.0) / 2.0;
  double w = box.w * spec.padding, h = box.h * spec.padding;
  const double aspect = static_cast<double>(spec.width) / spec.height;
  if (w > aspect * h) {
    h = w / aspect;
  } else {
    w = h * aspect;
  }
  const double s = spec.width / w;
  return Affine2::translation((spec.width - 1) / 2.0, (spec.height - 1) / 2.0)
      .after(Affine2::scaling(s, s))
      .after(Affine2::translation(-cx, -cy));
}

CropResult crop_and_normalize(const Image& image, const BBox& box, const CropSpec& spec) {
  if (box.x + box.w <= 0 || box.y + box.h <= 0 || box.x >= image.width || box.y >= image.height) {
    throw DatasetError("bounding box does not intersect the image");
  }
  CropResult r;
  r.to_crop = crop_transform(box, spec);
  r.to_image = r.to_crop.inverse();
  const std::vector<float> planar = resample_planar(image, r.to_image, spec.width, spec.height);
  const size_t plane = static_cast<size_t>(spec.width) * spec.height;
  std::vector<float> data(3 * plane);
  for (size_t c = 0; c < 3; ++c) {
    const size_t src = image.channels == 3 ? c : 0;
    for (size_t i = 0; i < plane; ++i) {
      data[c * plane + i] = (planar[src * plane + i] / 255.0f - kPixelMean[c]) / kPixelStd[c];
    }
  }
  r.image = Tensor::from_data({3, spec.height, spec.width}, std::move(data));
  return r;
}

KeypointInstance transform_instance(const KeypointInstance& inst, const Affine2& map) {
  KeypointInstance out = inst;
  for (auto& k : out.keypoints) {
    if (k.v == 0) continue;
    map.apply(k.x, k.y, k.x, k.y);
  }
  double xs[4], ys[4];
  const BBox& b = inst.bbox;
  map.apply(b.x, b.y, xs[0], ys[0]);
  map.apply(b.x + b.w, b.y, xs[1], ys[1]);
  map.apply(b.x, b.y + b.h, xs[2], ys[2]);
  map.apply(b.x + b.w, b.y + b.h, xs[3], ys[3]);
  const double x0 = *std::min_element(xs, xs + 4), x1 = *std::max_element(xs, xs + 4);
  const double y0 = *std::min_element(ys, ys + 4), y1 = *std::max_element(ys, ys + 4);
  out.bbox = {x0, y0, x1 - x0, y1 - y0};
  if (inst.area) out.area = *inst.area * std::fabs(map.determinant());
  return out;
}

Affine2 AugmentDraw::transform(const BBox& box) const {
  const double cx = box.x + (box.w - 1.0) / 2.0, cy = box.y + (box.h - 1.0) / 2.0;
  const double rad = rotation_deg * M_PI / 180.0;
  return Affine2::translation(shift_x, shift_y).after(Affine2::about(cx, cy, rad, scale));
}

namespace {

BBox clip_box(const BBox& b, int width, int height) {
  const double x0 = std::clamp(b.x, 0.0, static_cast<double>(width));
  const double y0 = std::clamp(b.y, 0.0, static_cast<double>(height));
  const double x1 = std::clamp(b.x + b.w, 0.0, static_cast<double>(width));
  const double y1 = std::clamp(b.y + b.h, 0.0, static_cast<double>(height));
  return {x0, y0, x1 - x0, y1 - y0};
}

bool degenerate(const KeypointInstance& inst, const Image& image) {
  if (inst.bbox.w < 1.0 || inst.bbox.h < 1.0) return true;
  for (const auto& k : inst.keypoints) {
    if (k.v > 0 && (k.x < 0 || k.y < 0 || k.x >= image.width || k.y >= image.height)) return true;
  }
  return false;
}

}  // namespace

Augmented apply_augment(const Image& image, const KeypointInstance& inst, const AugmentDraw& draw) {
  Augmented out;
  out.draw = draw;
  const Affine2 fwd = draw.transform(inst.bbox);
  out.image = warp_affine(image, fwd.inverse(), image.width, image.height);
  out.instance = transform_instance(inst, fwd);
  out.instance.bbox = clip_box(out.instance.bbox, image.width, image.height);
  for (const auto& p : draw.patches) {
    for (int y = std::max(0, p.y); y < std::min(image.height, p.y + p.h); ++y) {
      for (int x = std::max(0, p.x); x < std::min(image.width, p.x + p.w); ++x) {
        for (int c = 0; c < image.channels; ++c) out.image.at(x, y, c) = p.value;
      }
    }
  }
  return out;
}

Augmented augment(const Image& image, const KeypointInstance& inst, uint64_t seed,
                  const AugmentPolicy& policy) {
  Rng rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  for (int attempt = 1; attempt <= 10; ++attempt) {
    AugmentDraw d;
    d.scale = uniform(1.0 - policy.scale, 1.0 + policy.scale);
    d.rotation_deg = uniform(-policy.rotation_deg, policy.rotation_deg);
    d.shift_x = uniform(-policy.shift, policy.shift) * inst.bbox.w;
    d.shift_y = uniform(-policy.shift, policy.shift) * inst.bbox.h;
    const int patches =
        policy.occlusion_patches > 0
            ? std::uniform_int_distribution<int>(0, policy.occlusion_patches)(rng)
            : 0;
    for (int i = 0; i < patches; ++i) {
      OcclusionPatch p;
      p.w = std::max(1, static_cast<int>(uniform(0.05, std::max(0.05, policy.occlusion_size)) * inst.bbox.w));
      p.h = std::max(1, static_cast<int>(uniform(0.05, std::max(0.05, policy.occlusion_size)) * inst.bbox.h));
      p.x = static_cast<int>(std::floor(uniform(inst.bbox.x, inst.bbox.x + inst.bbox.w)));
      p.y = static_cast<int>(std::floor(uniform(inst.bbox.y, inst.bbox.y + inst.bbox.h)));
      p.value = static_cast<uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng));
      d.patches.push_back(p);
    }
    Augmented out = apply_augment(image, inst, d);
    if (!degenerate(out.instance, image)) {
      out.attempts = attempt;
      return out;
    }
  }
  Augmented out;
  out.image = image;
  out.instance = inst;
  out.attempts = 0;
  return out;
}

}  // namespace cattlepose
