// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The zonecsi authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Experiment configuration: a flat `key = value` file. Lines starting with
// '#' are comments. Every key has a default; unknown keys are rejected.
// docs/config.md lists the keys.

#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/mobility.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/transform.hpp"

namespace zonecsi {

enum class Precision { Float, Double };

/// One compared method: B zone models of width factor beta.
struct MethodSpec {
  int zones = 1;
  std::int64_t beta = 4;

  std::string name() const {
    return std::to_string(zones) + "-zone (beta=" + std::to_string(beta) + ")";
  }
  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct ExperimentConfig {
  std::string name = "zonecsi";
  std::string dataset_path;  // empty: synthesize from the scene
  SceneConfig scene{};
  int n_c = 32;
  NormalizerKind normalizer = NormalizerKind::Rms;
  std::int64_t codeword_len = 64;
  std::int64_t beta = 4;
  Activation activation = Activation::Saturating;
  Precision precision = Precision::Float;
  int zones = 8;
  std::uint64_t zones_seed = 1;
  int kmeans_iters = 100;
  TrainConfig train{};
  std::int64_t split_train_count = 8000;
  MobilityConfig mobility{};
  CachePolicy policy = CachePolicy::DownloadAllOnce;
  int cache_capacity = 1;
  bool include_classifier = false;  // add the 2B centroid reals to each download
  int mobility_repeats = 1;
  std::vector<MethodSpec> methods;  // empty: {1 x beta, zones x beta}
  unsigned threads = 1;

  std::vector<MethodSpec> resolved_methods() const {
    if (!methods.empty()) return methods;
    std::vector<MethodSpec> m{{1, beta}};
    if (zones != 1) m.push_back({zones, beta});
    return m;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long i = std::stoull(v, &used);
    if (used != v.size() || (!v.empty() && v[0] == '-')) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidConfig, "key '" + key + "': expected a seed, got '" + v + "'");
  }
}

inline int parse_count(const std::string& key, const std::string& v) {
  const auto i = parse_int(key, v);
  require(i >= 0 && i <= (1 << 30), ErrorKind::InvalidConfig, "key '" + key + "' out of range");
  return static_cast<int>(i);
}

inline std::vector<MethodSpec> parse_methods(const std::string& key, const std::string& v) {
  // "1x4, 8x4"
  std::vector<MethodSpec> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto x = item.find('x');
    require(x != std::string::npos, ErrorKind::InvalidConfig,
            "key '" + key + "': method '" + item + "' is not of the form <zones>x<beta>");
    out.push_back({parse_count(key, item.substr(0, x)), parse_int(key, item.substr(x + 1))});
    require(out.back().zones >= 1 && out.back().beta >= 1, ErrorKind::InvalidConfig,
            "key '" + key + "': zones and beta must be >= 1");
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::map<std::string, Setter> setters = {
      {"experiment.name", [](C& c, S, S v) { c.name = v; }},
      {"experiment.dataset", [](C& c, S, S v) { c.dataset_path = v; }},
      {"experiment.methods", [](C& c, S k, S v) { c.methods = parse_methods(k, v); }},
      {"experiment.threads", [](C& c, S k, S v) { c.threads = static_cast<unsigned>(parse_count(k, v)); }},
      {"scene.cell_x_min", [](C& c, S k, S v) { c.scene.cell.x_min = parse_double(k, v); }},
      {"scene.cell_x_max", [](C& c, S k, S v) { c.scene.cell.x_max = parse_double(k, v); }},
      {"scene.cell_y_min", [](C& c, S k, S v) { c.scene.cell.y_min = parse_double(k, v); }},
      {"scene.cell_y_max", [](C& c, S k, S v) { c.scene.cell.y_max = parse_double(k, v); }},
      {"scene.bs_x", [](C& c, S k, S v) { c.scene.bs_position.x() = parse_double(k, v); }},
      {"scene.bs_y", [](C& c, S k, S v) { c.scene.bs_position.y() = parse_double(k, v); }},
      {"scene.bs_z", [](C& c, S k, S v) { c.scene.bs_position.z() = parse_double(k, v); }},
      {"scene.array_h", [](C& c, S k, S v) { c.scene.array.n_horizontal = parse_count(k, v); }},
      {"scene.array_v", [](C& c, S k, S v) { c.scene.array.n_vertical = parse_count(k, v); }},
      {"scene.element_spacing", [](C& c, S k, S v) { c.scene.array.element_spacing = parse_double(k, v); }},
      {"scene.ue_height", [](C& c, S k, S v) { c.scene.ue_height = parse_double(k, v); }},
      {"scene.scatterer_height_max", [](C& c, S k, S v) { c.scene.scatterer_height_max = parse_double(k, v); }},
      {"scene.scatterer_margin", [](C& c, S k, S v) { c.scene.scatterer_margin = parse_double(k, v); }},
      {"scene.zones", [](C& c, S k, S v) { c.scene.num_generator_zones = parse_count(k, v); }},
      {"scene.scatterers_per_zone", [](C& c, S k, S v) { c.scene.scatterers_per_zone = parse_count(k, v); }},
      {"scene.carrier_hz", [](C& c, S k, S v) { c.scene.carrier_frequency = parse_double(k, v); }},
      {"scene.bandwidth_hz", [](C& c, S k, S v) { c.scene.bandwidth = parse_double(k, v); }},
      {"scene.subcarriers", [](C& c, S k, S v) { c.scene.num_subcarriers = parse_count(k, v); }},
      {"scene.max_delay_taps", [](C& c, S k, S v) { c.scene.max_delay_taps = parse_count(k, v); }},
      {"scene.max_paths", [](C& c, S k, S v) { c.scene.max_paths = parse_count(k, v); }},
      {"scene.pathloss_exponent", [](C& c, S k, S v) { c.scene.pathloss_exponent = parse_double(k, v); }},
      {"scene.grid_nx", [](C& c, S k, S v) { c.scene.grid_nx = parse_count(k, v); }},
      {"scene.grid_ny", [](C& c, S k, S v) { c.scene.grid_ny = parse_count(k, v); }},
      {"scene.seed", [](C& c, S k, S v) { c.scene.rng_seed = parse_seed(k, v); }},
      {"transform.n_c", [](C& c, S k, S v) { c.n_c = parse_count(k, v); }},
      {"transform.normalizer",
       [](C& c, S k, S v) {
         if (v == "rms") c.normalizer = NormalizerKind::Rms;
         else if (v == "max-abs") c.normalizer = NormalizerKind::MaxAbs;
         else fail(ErrorKind::InvalidConfig, "key '" + k + "': expected rms|max-abs");
       }},
      {"model.l", [](C& c, S k, S v) { c.codeword_len = parse_int(k, v); }},
      {"model.beta", [](C& c, S k, S v) { c.beta = parse_int(k, v); }},
      {"model.activation",
       [](C& c, S k, S v) {
         if (v == "linear") c.activation = Activation::Linear;
         else if (v == "saturating") c.activation = Activation::Saturating;
         else fail(ErrorKind::InvalidConfig, "key '" + k + "': expected linear|saturating");
       }},
      {"model.precision",
       [](C& c, S k, S v) {
         if (v == "float") c.precision = Precision::Float;
         else if (v == "double") c.precision = Precision::Double;
         else fail(ErrorKind::InvalidConfig, "key '" + k + "': expected float|double");
       }},
      {"zones.b", [](C& c, S k, S v) { c.zones = parse_count(k, v); }},
      {"zones.seed", [](C& c, S k, S v) { c.zones_seed = parse_seed(k, v); }},
      {"zones.max_iters", [](C& c, S k, S v) { c.kmeans_iters = parse_count(k, v); }},
      {"train.lr", [](C& c, S k, S v) { c.train.learning_rate = parse_double(k, v); }},
      {"train.beta1", [](C& c, S k, S v) { c.train.beta1 = parse_double(k, v); }},
      {"train.beta2", [](C& c, S k, S v) { c.train.beta2 = parse_double(k, v); }},
      {"train.adam_eps", [](C& c, S k, S v) { c.train.epsilon = parse_double(k, v); }},
      {"train.batch", [](C& c, S k, S v) { c.train.batch_size = parse_int(k, v); }},
      {"train.epochs", [](C& c, S k, S v) { c.train.epochs = parse_int(k, v); }},
      {"train.seed", [](C& c, S k, S v) { c.train.seed = parse_seed(k, v); }},
      {"train.bn_momentum", [](C& c, S k, S v) { c.train.batch_norm.momentum = parse_double(k, v); }},
      {"train.bn_eps", [](C& c, S k, S v) { c.train.batch_norm.epsilon = parse_double(k, v); }},
      {"train.bn_recalibrate",
       [](C& c, S k, S v) {
         if (v == "true") c.train.recalibrate_batchnorm = true;
         else if (v == "false") c.train.recalibrate_batchnorm = false;
         else fail(ErrorKind::InvalidConfig, "key '" + k + "': expected true|false");
       }},
      {"train.split_train_count", [](C& c, S k, S v) { c.split_train_count = parse_int(k, v); }},
      {"mobility.speed_kmh", [](C& c, S k, S v) { c.mobility.speed = parse_double(k, v) / 3.6; }},
      {"mobility.horizon_s", [](C& c, S k, S v) { c.mobility.horizon = parse_double(k, v); }},
      {"mobility.dt_s", [](C& c, S k, S v) { c.mobility.dt = parse_double(k, v); }},
      {"mobility.seed", [](C& c, S k, S v) { c.mobility.seed = parse_seed(k, v); }},
      {"mobility.repeats", [](C& c, S k, S v) { c.mobility_repeats = parse_count(k, v); }},
      {"mobility.policy",
       [](C& c, S k, S v) {
         if (v == "download-all-once") c.policy = CachePolicy::DownloadAllOnce;
         else if (v == "per-switch") c.policy = CachePolicy::PerSwitch;
         else if (v == "cache") c.policy = CachePolicy::Lru;
         else fail(ErrorKind::InvalidConfig,
                   "key '" + k + "': expected download-all-once|per-switch|cache");
       }},
      {"mobility.include_classifier",
       [](C& c, S k, S v) {
         if (v == "true") c.include_classifier = true;
         else if (v == "false") c.include_classifier = false;
         else fail(ErrorKind::InvalidConfig, "key '" + k + "': expected true|false");
       }},
      {"mobility.cache_capacity", [](C& c, S k, S v) { c.cache_capacity = parse_count(k, v); }},
  };
  return setters;
}

}  // namespace detail

/// Applies one `key = value` assignment.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  const auto& setters = detail::config_setters();
  const auto it = setters.find(key);
  require(it != setters.end(), ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg = {}) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidConfig,
            "line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::config_setters()) keys.push_back(k);
  return keys;
}

/// Canonical rendering of every setting; feeds the config hash.
inline std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  const auto& s = c.scene;
  os << "experiment.name=" << c.name << "\nexperiment.dataset=" << c.dataset_path
     << "\nexperiment.methods=";
  for (const auto& m : c.resolved_methods()) os << m.zones << 'x' << m.beta << ';';
  os << "\nscene=" << s.cell.x_min << ',' << s.cell.x_max << ',' << s.cell.y_min << ','
     << s.cell.y_max << ',' << s.bs_position.transpose() << ',' << s.array.n_horizontal << ','
     << s.array.n_vertical << ',' << s.array.element_spacing << ',' << s.ue_height << ','
     << s.scatterer_height_max << ',' << s.scatterer_margin << ',' << s.num_generator_zones << ','
     << s.scatterers_per_zone << ',' << s.carrier_frequency << ',' << s.bandwidth << ','
     << s.num_subcarriers << ',' << s.max_delay_taps << ',' << s.max_paths << ',' << s.pathloss_exponent << ','
     << s.grid_nx << ',' << s.grid_ny << ',' << s.rng_seed << "\ntransform.n_c=" << c.n_c
     << "\ntransform.normalizer=" << static_cast<int>(c.normalizer)
     << "\nmodel=" << c.codeword_len << ',' << c.beta << ',' << static_cast<int>(c.activation)
     << ',' << static_cast<int>(c.precision) << "\nzones=" << c.zones << ',' << c.zones_seed
     << ',' << c.kmeans_iters << "\ntrain=" << c.train.learning_rate << ',' << c.train.beta1
     << ',' << c.train.beta2 << ',' << c.train.epsilon << ',' << c.train.batch_size << ','
     << c.train.epochs << ',' << c.train.seed << ',' << c.train.batch_norm.momentum << ','
     << c.train.batch_norm.epsilon << ',' << c.train.recalibrate_batchnorm << ','
     << c.split_train_count << "\nmobility="
     << c.mobility.speed << ',' << c.mobility.horizon << ',' << c.mobility.dt << ','
     << c.mobility.seed << ',' << c.mobility_repeats << ',' << static_cast<int>(c.policy) << ','
     << c.cache_capacity << ',' << c.include_classifier << '\n';
  return os.str();
}

/// FNV-1a 64.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace zonecsi
