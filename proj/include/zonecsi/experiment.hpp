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

// End-to-end pipeline: dataset -> split -> angular-delay transform ->
// normalize -> partition -> per-zone training -> evaluation -> mobility
// overhead -> comparison report.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/config.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/eval.hpp"
#include "zonecsi/io.hpp"
#include "zonecsi/mobility.hpp"
#include "zonecsi/parallel.hpp"
#include "zonecsi/rng.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/transform.hpp"
#include "zonecsi/zoning.hpp"

namespace zonecsi {

/// Samples in the angular-delay domain, one column each, unnormalized.
struct PreparedData {
  int n_t = 0;
  int num_subcarriers = 0;
  int n_c = 0;
  Eigen::MatrixXd x;
  std::vector<Eigen::Vector2d> positions;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double retained_energy = 1.0;  // aggregate over the dataset
  Rect extent;                   // region the mobility model walks in

  Eigen::MatrixXd columns(const std::vector<std::size_t>& idx) const {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
      out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(idx[j]));
    return out;
  }
  std::vector<Eigen::Vector2d> points(const std::vector<std::size_t>& idx) const {
    std::vector<Eigen::Vector2d> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(positions[i]);
    return out;
  }
};

inline Rect bounding_box(const std::vector<ChannelSample>& samples) {
  Rect r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : samples) {
    r.x_min = std::min(r.x_min, s.position.x());
    r.x_max = std::max(r.x_max, s.position.x());
    r.y_min = std::min(r.y_min, s.position.y());
    r.y_max = std::max(r.y_max, s.position.y());
  }
  return r;
}

/// Synthesizes the configured scene, stored at file precision so that a
/// dataset written and read back is the dataset that was trained on.
inline std::vector<ChannelSample> generate_dataset(const ExperimentConfig& cfg) {
  const Scene scene = generate_scene(cfg.scene);
  auto samples = synthesize_grid(scene, std::max(1u, cfg.threads));
  quantize_to_storage(samples);
  return samples;
}

/// Seeded uniform split without replacement; both index lists sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t count, std::int64_t train_count, std::uint64_t seed) {
  require(train_count >= 2 && static_cast<std::size_t>(train_count) < count,
          ErrorKind::InvalidConfig,
          "train.split_train_count must lie in [2, " + std::to_string(count) +
              ") for a dataset of " + std::to_string(count) + " samples");
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0x5b1);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + train_count);
  std::vector<std::size_t> test(perm.begin() + train_count, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

inline PreparedData prepare_data(const std::vector<ChannelSample>& samples,
                                 const ExperimentConfig& cfg, const Rect* extent = nullptr) {
  require(!samples.empty(), ErrorKind::DegenerateInput, "dataset is empty");
  PreparedData d;
  d.n_t = static_cast<int>(samples.front().channel.rows());
  d.num_subcarriers = static_cast<int>(samples.front().channel.cols());
  d.n_c = cfg.n_c;
  const AngularDelayTransform tf(d.n_t, d.num_subcarriers, d.n_c);
  const auto n = static_cast<Eigen::Index>(samples.size());
  d.x.resize(tf.dim(), n);
  std::vector<double> kept(samples.size()), total(samples.size());
  parallel_for(samples.size(), std::max(1u, cfg.threads), [&](std::size_t i) {
    const auto& h = samples[i].channel;
    require(h.rows() == d.n_t && h.cols() == d.num_subcarriers, ErrorKind::DimensionMismatch,
            "samples disagree on channel shape");
    const AngularDelayVector v = tf(h);
    d.x.col(static_cast<Eigen::Index>(i)) = v.values;
    kept[i] = v.values.squaredNorm();
    total[i] = h.squaredNorm();
  });
  const double sum_total = std::accumulate(total.begin(), total.end(), 0.0);
  d.retained_energy =
      sum_total > 0.0 ? std::accumulate(kept.begin(), kept.end(), 0.0) / sum_total : 1.0;
  for (const auto& s : samples) d.positions.emplace_back(s.position.x(), s.position.y());
  auto [tr, te] = split_indices(samples.size(), cfg.split_train_count, cfg.train.seed);
  d.train = std::move(tr);
  d.test = std::move(te);
  d.extent = extent ? *extent : bounding_box(samples);
  return d;
}

/// Loads the configured dataset file, or synthesizes the scene.
inline PreparedData load_prepared(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path.empty()) return prepare_data(read_dataset(cfg.dataset_path), cfg);
  return prepare_data(generate_dataset(cfg), cfg, &cfg.scene.cell);
}

template <class T>
struct TrainedMethod {
  MethodSpec method;
  LayerSpec spec;
  KMeansResult kmeans;
  std::vector<std::size_t> zone_sizes;
  std::vector<ModelParams<T>> models;
  std::vector<TrainReport> reports;
};

/// Clusters the training positions and fits one model per zone on that
/// zone's share of the training set.
template <class T>
TrainedMethod<T> train_method(const ExperimentConfig& cfg, const MethodSpec& method,
                              const PreparedData& data, const Normalizer& normalizer) {
  cfg.train.validate();
  TrainedMethod<T> out;
  out.method = method;
  out.spec = LayerSpec::from_dims(data.n_t, data.n_c, cfg.codeword_len, method.beta, cfg.activation);
  out.spec.validate();
  const auto train_pos = data.points(data.train);
  out.kmeans = kmeans_positions(train_pos, method.zones, cfg.zones_seed, cfg.kmeans_iters);
  const ZonedDataset zoned = partition_dataset(train_pos, out.kmeans.partition);
  const auto b_count = static_cast<std::size_t>(method.zones);
  out.models.resize(b_count);
  out.reports.resize(b_count);
  for (std::size_t b = 0; b < b_count; ++b) {
    out.zone_sizes.push_back(zoned.members[b].size());
    require(zoned.members[b].size() >= 2, ErrorKind::EmptyZone,
            "zone " + std::to_string(b + 1) + " has fewer than two training samples");
  }
  parallel_for(b_count, std::max(1u, cfg.threads), [&](std::size_t b) {
    std::vector<std::size_t> idx;
    for (auto m : zoned.members[b]) idx.push_back(data.train[m]);
    const Mat<T> x = (data.columns(idx) / normalizer.scale).cast<T>();
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.train.seed, 0x100 + b);
    out.models[b] = init_model<T>(out.spec, derive_seed(cfg.train.seed, 0x200 + b));
    out.reports[b] = train(out.models[b], x, tc);
  });
  return out;
}

template <class T>
ModelBundle make_bundle(const TrainedMethod<T>& m, const PreparedData& data,
                        const Normalizer& normalizer) {
  ModelBundle b;
  b.n_t = data.n_t;
  b.n_c = data.n_c;
  b.spec = m.spec;
  b.partition = m.kmeans.partition;
  b.normalizer = normalizer;
  for (const auto& model : m.models) b.models.push_back(model.template cast<double>());
  return b;
}

struct MethodOutcome {
  MethodSpec method;
  LayerSpec spec;
  std::vector<std::size_t> zone_sizes;
  std::vector<double> final_train_mse;
  EvalReport position;
  EvalReport oracle;
  SwitchSummary switching;
  OverheadReport overhead;
};

struct ExperimentSummary {
  std::uint64_t config_hash = 0;
  double retained_energy = 1.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  double normalizer_scale = 1.0;
  std::vector<MethodOutcome> methods;
  std::vector<ReportRow> rows;
  std::vector<std::string> artifacts;  // file names relative to the output directory
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string method_tag(const MethodSpec& m) {
  return std::to_string(m.zones) + "x" + std::to_string(m.beta);
}

/// Zone-switching statistics and download overhead of one partition.
inline std::pair<SwitchSummary, OverheadReport> mobility_overhead(const ExperimentConfig& cfg,
                                                                   const Rect& extent,
                                                                   const ZonePartition& partition,
                                                                   const LayerSpec& spec,
                                                                   Trajectory* first = nullptr) {
  MobilityConfig mc = cfg.mobility;
  mc.region = extent;
  mc.validate();
  const SwitchSummary sw = summarize_switching(mc, partition, std::max(1, cfg.mobility_repeats));
  // The first repeat drives the cache replay and the exported trajectory.
  MobilityConfig c0 = mc;
  c0.seed = derive_seed(mc.seed, 0);
  const Trajectory traj = simulate_trajectory(c0);
  const auto seq = zone_sequence(traj, partition);
  SwitchStats mean = sw.runs.front();
  mean.rate = sw.mean_rate;
  const int capacity = std::clamp(cfg.cache_capacity, 1, partition.zones());
  const std::int64_t payload =
      count_parameters(spec).encoder + (cfg.include_classifier ? 2 * partition.zones() : 0);
  const OverheadReport oh = compute_overhead(payload, partition.zones(),
                                             mean, seq, cfg.policy, mc.horizon, capacity);
  if (first) *first = traj;
  return {sw, oh};
}

namespace detail {

inline std::string manifest_text(const ExperimentConfig& cfg, const ExperimentSummary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "config_hash " << hex64(s.config_hash) << "\n"
     << "scene_seed " << cfg.scene.rng_seed << "\n"
     << "zones_seed " << cfg.zones_seed << "\n"
     << "train_seed " << cfg.train.seed << "\n"
     << "mobility_seed " << cfg.mobility.seed << "\n"
     << "train_samples " << s.train_count << "\n"
     << "test_samples " << s.test_count << "\n"
     << "retained_energy " << s.retained_energy << "\n"
     << "normalizer_scale " << s.normalizer_scale << "\n";
  for (const auto& m : s.methods) {
    const std::string t = method_tag(m.method);
    os << "method " << t << " position_mean_linear " << m.position.mean_linear
       << " oracle_mean_linear " << m.oracle.mean_linear << " position_mean_db "
       << m.position.mean_db << " oracle_mean_db " << m.oracle.mean_db
       << " position_mean_of_db " << m.position.mean_of_db << " switches_mean "
       << m.switching.mean_switches << "\n";
    os << "zone_sizes " << t;
    for (auto z : m.zone_sizes) os << ' ' << z;
    os << "\n";
  }
  for (const auto& a : s.artifacts) os << "artifact " << a << "\n";
  os << "\n" << canonical_config(cfg);
  return os.str();
}

template <class T>
ExperimentSummary run_experiment_impl(const ExperimentConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ExperimentSummary s;
  s.config_hash = config_hash(cfg);
  const std::string stamp = hex64(s.config_hash);

  PreparedData data;
  if (cfg.dataset_path.empty()) {
    const auto samples = generate_dataset(cfg);
    write_dataset((fs::path(out_dir) / "dataset.zcd1").string(), samples);
    s.artifacts.push_back("dataset.zcd1");
    data = prepare_data(samples, cfg, &cfg.scene.cell);
  } else {
    data = prepare_data(read_dataset(cfg.dataset_path), cfg);
  }
  s.retained_energy = data.retained_energy;
  s.train_count = data.train.size();
  s.test_count = data.test.size();
  const Normalizer normalizer = fit_normalizer(data.columns(data.train), cfg.normalizer);
  s.normalizer_scale = normalizer.scale;

  const Eigen::MatrixXd test = data.columns(data.test);
  const auto test_pos = data.points(data.test);
  std::vector<ExperimentResult> results;
  for (const auto& method : cfg.resolved_methods()) {
    const TrainedMethod<T> tm = train_method<T>(cfg, method, data, normalizer);
    MethodOutcome mo;
    mo.method = method;
    mo.spec = tm.spec;
    mo.zone_sizes = tm.zone_sizes;
    for (const auto& r : tm.reports) mo.final_train_mse.push_back(r.final_mse);
    mo.position = evaluate(tm.models, tm.kmeans.partition, normalizer, test, test_pos,
                           Routing::Position);
    mo.oracle = evaluate(tm.models, tm.kmeans.partition, normalizer, test, test_pos,
                         Routing::Oracle);
    Trajectory traj;
    std::tie(mo.switching, mo.overhead) =
        mobility_overhead(cfg, data.extent, tm.kmeans.partition, tm.spec, &traj);

    const std::string tag = method_tag(method);
    save_model((fs::path(out_dir) / ("model_" + tag + ".zcm1")).string(),
               make_bundle(tm, data, normalizer));
    write_text((fs::path(out_dir) / ("cdf_" + tag + ".csv")).string(), cdf_csv(mo.position.cdf));
    write_text((fs::path(out_dir) / ("trajectory_" + tag + ".csv")).string(),
               trajectory_csv(traj, zone_sequence(traj, tm.kmeans.partition)));
    s.artifacts.push_back("model_" + tag + ".zcm1");
    s.artifacts.push_back("cdf_" + tag + ".csv");
    s.artifacts.push_back("trajectory_" + tag + ".csv");

    results.push_back({method.name(), tm.spec, method.zones, mo.position.mean_db, mo.overhead});
    s.methods.push_back(std::move(mo));
  }
  s.rows = comparison_report(results);
  write_text((fs::path(out_dir) / "report.csv").string(), report_csv(s.rows));
  write_text((fs::path(out_dir) / "report.txt").string(),
             "# " + cfg.name + " config " + stamp + "\n" + report_table(s.rows));
  s.artifacts.push_back("report.csv");
  s.artifacts.push_back("report.txt");
  write_text((fs::path(out_dir) / "manifest.txt").string(), manifest_text(cfg, s));
  return s;
}

}  // namespace detail

/// Runs the whole pipeline and writes every artifact into `out_dir`.
/// Output bytes depend only on the configuration.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  require(cfg.n_c >= 1, ErrorKind::InvalidConfig, "transform.n_c must be >= 1");
  cfg.scene.validate();
  if (cfg.precision == Precision::Double) return detail::run_experiment_impl<double>(cfg, out_dir);
  return detail::run_experiment_impl<float>(cfg, out_dir);
}

}  // namespace zonecsi
