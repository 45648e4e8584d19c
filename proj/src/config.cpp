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

#include "cattlepose/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cattlepose {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

// Shortest decimal that reads back to the same double.
std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

const char* stage_kind_name(StageKind kind) {
  switch (kind) {
    case StageKind::kInvertedResidual: return "inverted_residual";
    case StageKind::kSfe: return "sfe";
    case StageKind::kRa: return "ra";
  }
  return "?";
}

StageKind parse_stage_kind(const std::string& name) {
  if (name == "inverted_residual") return StageKind::kInvertedResidual;
  if (name == "sfe") return StageKind::kSfe;
  if (name == "ra") return StageKind::kRa;
  throw ConfigError("unknown stage kind '" + name + "'");
}

void StageConfig::validate() const {
  if (in_channels <= 0 || out_channels <= 0) throw ConfigError("stage channel counts must be positive");
  if (stride != 1 && stride != 2) {
    throw ConfigError("stage stride must be 1 or 2, got " + std::to_string(stride));
  }
  if (kind == StageKind::kInvertedResidual) {
    if (expansion < 1) throw ConfigError("inverted residual expansion must be >= 1");
  } else {
    if (in_channels != out_channels) {
      throw ConfigError(std::string(stage_kind_name(kind)) + " stage must keep its channel count");
    }
    if (stride != 1) throw ConfigError(std::string(stage_kind_name(kind)) + " stage must use stride 1");
  }
}

int64_t HeadConfig::x_bins() const {
  return static_cast<int64_t>(std::llround(input_width * split_ratio));
}

int64_t HeadConfig::y_bins() const {
  return static_cast<int64_t>(std::llround(input_height * split_ratio));
}

void HeadConfig::validate() const {
  if (in_channels <= 0) throw ConfigError("head in_channels must be positive");
  if (num_keypoints < 1) throw ConfigError("head num_keypoints must be >= 1");
  if (!(split_ratio > 0.0)) throw ConfigError("simcc split ratio must be positive");
  if (x_bins() < 1 || y_bins() < 1) throw ConfigError("simcc bin counts must be >= 1");
  if (reduction < 1 || in_channels % reduction != 0) {
    throw ConfigError("head in_channels " + std::to_string(in_channels) +
                      " must be divisible by the channel-attention reduction " +
                      std::to_string(reduction));
  }
  if (!(target_sigma > 0.0)) throw ConfigError("target_sigma must be positive");
}

ModelConfig ModelConfig::reference() {
  ModelConfig c;
  c.stages = {
      {StageKind::kInvertedResidual, 16, 24, 2, 4},
      {StageKind::kInvertedResidual, 24, 32, 2, 4},
      {StageKind::kSfe, 32, 32, 1, 1},
      {StageKind::kInvertedResidual, 32, 64, 1, 4},
      {StageKind::kRa, 64, 64, 1, 1},
  };
  c.validate();
  return c;
}

bool ModelConfig::stage_enabled(const StageConfig& s) const {
  if (s.kind == StageKind::kSfe) return use_sfe;
  if (s.kind == StageKind::kRa) return use_ra;
  return true;
}

std::vector<StageConfig> ModelConfig::active_stages() const {
  std::vector<StageConfig> out;
  for (const auto& s : stages)
    if (stage_enabled(s)) out.push_back(s);
  return out;
}

int64_t ModelConfig::feature_channels() const {
  const auto act = active_stages();
  return act.empty() ? stem_channels : act.back().out_channels;
}

int64_t ModelConfig::feature_height() const { return input_height / output_stride; }
int64_t ModelConfig::feature_width() const { return input_width / output_stride; }

void ModelConfig::validate() {
  if (input_width < 1 || input_height < 1) throw ConfigError("input resolution must be positive");
  if (stem_channels < 1) throw ConfigError("stem_channels must be positive");
  if (wavelet_levels != 1) {
    throw ConfigError("wavelet_levels = " + std::to_string(wavelet_levels) +
                      ": only single-level decomposition is supported");
  }
  int64_t channels = stem_channels;
  int stride = 2;
  for (size_t i = 0; i < stages.size(); ++i) {
    stages[i].validate();
    if (!stage_enabled(stages[i])) continue;
    if (stages[i].in_channels != channels) {
      throw ConfigError("stage " + std::to_string(i) + " expects " +
                        std::to_string(stages[i].in_channels) + " input channels, previous stage gives " +
                        std::to_string(channels));
    }
    channels = stages[i].out_channels;
    stride *= stages[i].stride;
  }
  if (stride != output_stride) {
    throw ConfigError("backbone output stride is " + std::to_string(stride) + ", config declares " +
                      std::to_string(output_stride));
  }
  if (input_width % output_stride != 0 || input_height % output_stride != 0) {
    throw ConfigError("input resolution must be divisible by the output stride");
  }
  head.in_channels = channels;
  head.input_width = input_width;
  head.input_height = input_height;
  head.validate();
}

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "input_width") cfg.input_width = static_cast<int>(parse_int(key, val));
    else if (key == "input_height") cfg.input_height = static_cast<int>(parse_int(key, val));
    else if (key == "stem_channels") cfg.stem_channels = parse_int(key, val);
    else if (key == "output_stride") cfg.output_stride = static_cast<int>(parse_int(key, val));
    else if (key == "wavelet_levels") cfg.wavelet_levels = static_cast<int>(parse_int(key, val));
    else if (key == "use_sfe") cfg.use_sfe = parse_bool(key, val);
    else if (key == "use_ra") cfg.use_ra = parse_bool(key, val);
    else if (key == "use_sc2head") cfg.use_sc2head = parse_bool(key, val);
    else if (key == "num_keypoints") cfg.head.num_keypoints = static_cast<int>(parse_int(key, val));
    else if (key == "simcc_split_ratio") cfg.head.split_ratio = parse_double(key, val);
    else if (key == "cab_reduction") cfg.head.reduction = static_cast<int>(parse_int(key, val));
    else if (key == "target_sigma") cfg.head.target_sigma = parse_double(key, val);
    else if (key == "stage") {
      std::istringstream fields(val);
      std::string kind;
      long long cin = 0, cout = 0, stride = 0, expansion = 1;
      if (!(fields >> kind >> cin >> cout >> stride)) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": stage needs '<kind> <in> <out> <stride> [expansion]'");
      }
      if (!(fields >> expansion)) expansion = 1;
      cfg.stages.push_back({parse_stage_kind(kind), cin, cout, static_cast<int>(stride),
                            static_cast<int>(expansion)});
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::string serialize_model_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "input_width = " << cfg.input_width << '\n'
     << "input_height = " << cfg.input_height << '\n'
     << "stem_channels = " << cfg.stem_channels << '\n'
     << "output_stride = " << cfg.output_stride << '\n'
     << "wavelet_levels = " << cfg.wavelet_levels << '\n'
     << "use_sfe = " << (cfg.use_sfe ? "true" : "false") << '\n'
     << "use_ra = " << (cfg.use_ra ? "true" : "false") << '\n'
     << "use_sc2head = " << (cfg.use_sc2head ? "true" : "false") << '\n'
     << "num_keypoints = " << cfg.head.num_keypoints << '\n'
     << "simcc_split_ratio = " << format_double(cfg.head.split_ratio) << '\n'
     << "cab_reduction = " << cfg.head.reduction << '\n'
     << "target_sigma = " << format_double(cfg.head.target_sigma) << '\n';
  for (const auto& s : cfg.stages) {
    os << "stage = " << stage_kind_name(s.kind) << ' ' << s.in_channels << ' ' << s.out_channels
       << ' ' << s.stride << ' ' << s.expansion << '\n';
  }
  return os.str();
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_config(ss.str());
}

void save_model_config(const std::string& path, const ModelConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path);
  out << serialize_model_config(cfg);
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ModelConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_model_config(cfg))));
  return buf;
}

}  // namespace cattlepose
