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

// zonecsi command-line front end. Every subcommand reads the same key=value
// configuration (--config, then --set overrides, then --seed).

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/config.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/eval.hpp"
#include "zonecsi/experiment.hpp"
#include "zonecsi/io.hpp"
#include "zonecsi/mobility.hpp"
#include "zonecsi/zoning.hpp"

namespace fs = std::filesystem;
using namespace zonecsi;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 1;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    const Bytes raw = read_file(g.config_path);
    cfg = parse_config(std::string(raw.begin(), raw.end()));
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidConfig,
            "--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (g.seed) {
    cfg.scene.rng_seed = *g.seed;
    cfg.zones_seed = *g.seed;
    cfg.train.seed = *g.seed;
    cfg.mobility.seed = *g.seed;
  }
  cfg.threads = g.threads;
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return (fs::path(g.out) / name).string();
}

PreparedData data_for(const ExperimentConfig& cfg, const std::string& dataset) {
  if (dataset.empty()) return load_prepared(cfg);
  ExperimentConfig c = cfg;
  c.dataset_path = dataset;
  return load_prepared(c);
}

void print_overhead(const OverheadReport& oh, const SwitchSummary& sw) {
  std::cout << std::fixed << std::setprecision(2) << "policy " << to_string(oh.policy)
            << "\nzones " << oh.zones << "\npayload " << oh.payload << "\nmean_switches "
            << sw.mean_switches << "\nstd_switches " << sw.std_switches
            << std::setprecision(6) << "\nmpur " << oh.mpur << "\nmptr " << std::setprecision(2)
            << oh.mptr << "\ndownloads " << oh.downloads << "\n";
}

template <class T>
void do_train(const ExperimentConfig& cfg, const PreparedData& data, const std::string& path) {
  const Normalizer norm = fit_normalizer(data.columns(data.train), cfg.normalizer);
  const MethodSpec m{cfg.zones, cfg.beta};
  const TrainedMethod<T> tm = train_method<T>(cfg, m, data, norm);
  save_model(path, make_bundle(tm, data, norm));
  for (std::size_t b = 0; b < tm.reports.size(); ++b)
    std::cout << "zone " << b + 1 << " samples " << tm.zone_sizes[b] << " final_mse "
              << std::setprecision(6) << tm.reports[b].final_mse << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zonecsi: zone-based CSI feedback compression"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "override one config key (key=value), repeatable");
  auto* seed_opt = app.add_option("--seed", seed_value, "set the scene, zone, train and mobility seeds");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker thread cap")->check(CLI::Range(1u, 1024u));

  auto* gen = app.add_subcommand("generate", "synthesize the scene into dataset.zcd1");

  auto* ingest = app.add_subcommand("ingest", "convert an external CSV to dataset.zcd1");
  std::string ingest_in;
  int ingest_nt = 64, ingest_k = 64;
  ingest->add_option("input", ingest_in, "CSV: x,y,z then 2*N_t*K floats per row")->required();
  ingest->add_option("--n-t", ingest_nt, "antennas");
  ingest->add_option("--k", ingest_k, "subcarriers");

  std::string dataset;
  auto* part = app.add_subcommand("partition", "cluster training positions into zones.b zones");
  part->add_option("--dataset", dataset, "ZCD1 input (default: synthesize)");

  auto* trn = app.add_subcommand("train", "train zones.b models of width model.beta");
  trn->add_option("--dataset", dataset, "ZCD1 input (default: synthesize)");

  std::string model_path;
  std::string routing = "position";
  auto* evl = app.add_subcommand("evaluate", "score a model bundle on the test split");
  evl->add_option("--model", model_path, "ZCM1 bundle")->required()->check(CLI::ExistingFile);
  evl->add_option("--dataset", dataset, "ZCD1 input (default: synthesize)");
  evl->add_option("--routing", routing, "position|oracle")
      ->check(CLI::IsMember({"position", "oracle"}));

  auto* mob = app.add_subcommand("mobility", "zone switching and download overhead");
  mob->add_option("--model", model_path, "ZCM1 bundle supplying the partition")
      ->required()
      ->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "run the full comparison experiment");

  std::int64_t probes = 200, batch = 4;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient check (double)");
  grad->add_option("--probes", probes, "parameters probed")->check(CLI::PositiveNumber);
  grad->add_option("--batch", batch, "batch size")->check(CLI::Range(2, 1 << 20));

  int count_nt = 64, count_zones = 1;
  double count_horizon = 3600.0;
  auto* cnt = app.add_subcommand("count", "parameter, multiplication and MPTR accounting");
  cnt->add_option("--n-t", count_nt, "antennas");
  cnt->add_option("--zones", count_zones, "B")->check(CLI::PositiveNumber);
  cnt->add_option("--horizon", count_horizon, "T in seconds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    const ExperimentConfig cfg = load_config(g);
    if (*gen) {
      const auto samples = generate_dataset(cfg);
      write_dataset(out_path(g, "dataset.zcd1"), samples);
      std::cout << "wrote " << samples.size() << " samples to " << out_path(g, "dataset.zcd1")
                << " config " << hex64(config_hash(cfg)) << "\n";
    } else if (*ingest) {
      const Bytes raw = read_file(ingest_in);
      const auto samples = parse_channel_csv(std::string(raw.begin(), raw.end()), ingest_nt, ingest_k);
      write_dataset(out_path(g, "dataset.zcd1"), samples);
      std::cout << "wrote " << samples.size() << " samples\n";
    } else if (*part) {
      const PreparedData data = data_for(cfg, dataset);
      const auto pos = data.points(data.train);
      const KMeansResult km = kmeans_positions(pos, cfg.zones, cfg.zones_seed, cfg.kmeans_iters);
      const ZonedDataset zd = partition_dataset(pos, km.partition);
      std::ostringstream os;
      os << "zone,x,y,train_samples\n" << std::setprecision(12);
      for (int b = 0; b < km.partition.zones(); ++b) {
        const auto& c = km.partition.centroids[static_cast<std::size_t>(b)];
        os << b + 1 << ',' << c.x() << ',' << c.y() << ',' << zd.members[static_cast<std::size_t>(b)].size() << '\n';
      }
      write_text(out_path(g, "partition.csv"), os.str());
      std::cout << os.str();
    } else if (*trn) {
      const PreparedData data = data_for(cfg, dataset);
      const std::string path =
          out_path(g, "model_" + method_tag({cfg.zones, cfg.beta}) + ".zcm1");
      if (cfg.precision == Precision::Double) do_train<double>(cfg, data, path);
      else do_train<float>(cfg, data, path);
      std::cout << "wrote " << path << "\n";
    } else if (*evl) {
      const ModelBundle bundle = load_model(model_path);
      ExperimentConfig c = cfg;
      c.n_c = bundle.n_c;
      const PreparedData data = data_for(c, dataset);
      require(data.n_t == bundle.n_t, ErrorKind::DimensionMismatch,
              "dataset and model disagree on N_t");
      const EvalReport r = evaluate(bundle.models, bundle.partition, bundle.normalizer,
                                    data.columns(data.test), data.points(data.test),
                                    routing == "oracle" ? Routing::Oracle : Routing::Position);
      write_text(out_path(g, "cdf.csv"), cdf_csv(r.cdf));
      std::cout << "samples " << r.nmse_linear.size() << "\nmean_nmse_db " << format_db(r.mean_db)
                << "\nmean_of_db " << format_db(r.mean_of_db) << "\n";
      for (const auto& z : r.zones)
        std::cout << "zone " << z.zone << " samples " << z.samples << " mean_nmse_db "
                  << format_db(to_db(z.mean_linear)) << "\n";
    } else if (*mob) {
      const ModelBundle bundle = load_model(model_path);
      Rect region = cfg.dataset_path.empty() ? cfg.scene.cell
                                             : bounding_box(read_dataset(cfg.dataset_path));
      Trajectory traj;
      const auto [sw, oh] = mobility_overhead(cfg, region, bundle.partition, bundle.spec, &traj);
      write_text(out_path(g, "trajectory.csv"), trajectory_csv(traj, zone_sequence(traj, bundle.partition)));
      print_overhead(oh, sw);
    } else if (*rep) {
      const ExperimentSummary s = run_experiment(cfg, g.out);
      std::cout << "config " << hex64(s.config_hash) << "\n" << report_table(s.rows);
    } else if (*grad) {
      const LayerSpec spec = LayerSpec::from_dims(cfg.scene.array.num_antennas(), cfg.n_c,
                                                  cfg.codeword_len, cfg.beta, cfg.activation);
      const auto model = init_model<double>(spec, cfg.train.seed);
      Rng rng = make_rng(cfg.train.seed, 0x6c);
      Mat<double> x(spec.input_dim, batch);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0, 1.0);
      const auto res = gradient_check(model, x, probes, cfg.train.seed, 1e-4, 1e-6, cfg.train.batch_norm);
      std::cout << "probes " << res.probes << "\ngroups " << res.groups.size()
                << "\nmax_relative_error " << std::scientific << res.max_relative_error << "\n";
      return res.max_relative_error < 1e-5 ? 0 : 4;
    } else if (*cnt) {
      const LayerSpec spec = LayerSpec::from_dims(count_nt, cfg.n_c, cfg.codeword_len, cfg.beta, cfg.activation);
      spec.validate();
      const auto pc = count_parameters(spec);
      const auto mc = count_multiplications(spec);
      const auto gamma = compression_rate(cfg.codeword_len, count_nt, cfg.n_c);
      const OverheadReport oh = compute_overhead(pc.encoder, count_zones, {}, {},
                                                 CachePolicy::DownloadAllOnce, count_horizon);
      std::cout << "input_dim " << spec.input_dim << "\nhidden " << spec.hidden()
                << "\ncompression_rate " << gamma.num << "/" << gamma.den
                << "\nparams_encoder " << with_commas(pc.encoder * count_zones)
                << "\nparams_decoder " << with_commas(pc.decoder * count_zones)
                << "\nparams_total " << with_commas(pc.total * count_zones)
                << "\nmultiplications_encoder " << with_commas(mc.encoder)
                << "\nmultiplications_decoder " << with_commas(mc.decoder) << std::fixed
                << std::setprecision(2) << "\nmptr_download_all_once " << oh.mptr << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
