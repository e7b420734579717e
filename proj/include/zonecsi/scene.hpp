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

// Synthetic site geometry and zone-structured multipath channels.
//
// The cell is a rectangle on the ground plane tiled into congruent generator
// zones. Each zone owns a fixed set of scatterers; a UE inside a zone sees a
// line-of-sight path plus one single-bounce path per scatterer of its zone.
// The frequency-domain channel for subcarrier k is
//
//   h_k = sum_l alpha_l * exp(-j 2 pi f_k tau_l) * a(az_l, el_l),  f_k = k W / K.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "zonecsi/error.hpp"
#include "zonecsi/parallel.hpp"
#include "zonecsi/rng.hpp"

namespace zonecsi {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kTwoPi = 2.0 * M_PI;

struct ArrayGeometry {
  int n_horizontal = 16;
  int n_vertical = 4;
  double element_spacing = 0.5;  // in wavelengths

  int num_antennas() const { return n_horizontal * n_vertical; }

  void validate() const {
    require(n_horizontal >= 1 && n_vertical >= 1, ErrorKind::InvalidConfig,
            "array dimensions must be positive");
    require(element_spacing > 0.0, ErrorKind::InvalidConfig, "element spacing must be positive");
  }
};

/// Planar array response; element n = n_h + N_h * n_v. Every entry has unit
/// modulus, so the vector norm is sqrt(N_t).
inline Eigen::VectorXcd array_response(const ArrayGeometry& geometry, double azimuth,
                                       double elevation) {
  const int nh = geometry.n_horizontal;
  const int nv = geometry.n_vertical;
  Eigen::VectorXcd a(nh * nv);
  const double u = std::cos(elevation) * std::sin(azimuth);
  const double v = std::sin(elevation);
  for (int iv = 0; iv < nv; ++iv) {
    for (int ih = 0; ih < nh; ++ih) {
      const double phase = kTwoPi * geometry.element_spacing * (ih * u + iv * v);
      a(ih + nh * iv) = std::polar(1.0, phase);
    }
  }
  return a;
}

struct PathComponent {
  double gain_amplitude = 0.0;
  double gain_phase = 0.0;  // [0, 2pi)
  double azimuth = 0.0;
  double elevation = 0.0;
  double delay = 0.0;  // seconds
};

/// Frequency-domain channel (N_t x K) from an explicit path list.
inline Eigen::MatrixXcd channel_from_paths(const ArrayGeometry& geometry,
                                           const std::vector<PathComponent>& paths,
                                           int num_subcarriers, double bandwidth) {
  const int nt = geometry.num_antennas();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(nt, num_subcarriers);
  for (const auto& p : paths) {
    const Eigen::VectorXcd a = array_response(geometry, p.azimuth, p.elevation);
    const std::complex<double> alpha = std::polar(p.gain_amplitude, p.gain_phase);
    for (int k = 0; k < num_subcarriers; ++k) {
      const double fk = static_cast<double>(k) * bandwidth / num_subcarriers;
      const std::complex<double> g = alpha * std::polar(1.0, -kTwoPi * fk * p.delay);
      h.col(k) += g * a;
    }
  }
  return h;
}

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  Eigen::Vector2d center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

struct SceneConfig {
  Rect cell{100.0, 260.0, -80.0, 80.0};
  Eigen::Vector3d bs_position{0.0, 0.0, 25.0};
  ArrayGeometry array{};
  double ue_height = 1.5;
  double scatterer_height_max = 20.0;
  double scatterer_margin = 0.1;  // fraction of the tile size scatterers may spill over
  int num_generator_zones = 8;
  int scatterers_per_zone = 14;
  double carrier_frequency = 3.5e9;
  double bandwidth = 20e6;
  int num_subcarriers = 64;
  int max_delay_taps = 32;  // every delay must stay below max_delay_taps / bandwidth
  int max_paths = 15;
  double pathloss_exponent = 3.0;
  int grid_nx = 100;
  int grid_ny = 100;
  std::uint64_t rng_seed = 1;

  double wavelength() const { return kSpeedOfLight / carrier_frequency; }

  void validate() const {
    array.validate();
    require(cell.width() > 0.0 && cell.height() > 0.0, ErrorKind::InvalidConfig,
            "cell extent has zero area");
    require(num_generator_zones >= 1 && scatterers_per_zone >= 1 && max_paths >= 1,
            ErrorKind::InvalidConfig, "zone, scatterer and path counts must be >= 1");
    require(grid_nx >= 1 && grid_ny >= 1, ErrorKind::InvalidConfig, "UE grid must be non-empty");
    require(bandwidth > 0.0 && carrier_frequency > 0.0, ErrorKind::InvalidConfig,
            "bandwidth and carrier must be positive");
    require(num_subcarriers >= 1 && max_delay_taps >= 1 && num_subcarriers >= max_delay_taps,
            ErrorKind::InvalidConfig, "need K >= N_c >= 1");
    require(scatterer_margin >= 0.0 && scatterer_height_max >= 0.0, ErrorKind::InvalidConfig,
            "scatterer placement bounds must be non-negative");
  }
};

struct Scatterer {
  Eigen::Vector3d position;
  double phase = 0.0;
};

struct GeneratorZone {
  Rect region;
  std::vector<Scatterer> scatterers;
  double los_phase = 0.0;
};

struct ChannelSample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::MatrixXcd channel;  // N_t x K
};

/// Rows x columns of the near-square zone grid: rows is the largest divisor
/// of n not exceeding sqrt(n).
inline std::pair<int, int> zone_grid_shape(int n) {
  int rows = 1;
  for (int r = 1; r * r <= n; ++r) {
    if (n % r == 0) rows = r;
  }
  return {rows, n / rows};
}

struct Scene {
  SceneConfig config;
  std::vector<GeneratorZone> zones;
  std::vector<Eigen::Vector3d> ue_grid;
  int grid_rows = 1;
  int grid_cols = 1;

  /// Generator zone (0-based, row-major) containing a ground-plane point.
  int zone_of(double x, double y) const {
    const Rect& c = config.cell;
    const int col = std::clamp(static_cast<int>(std::floor((x - c.x_min) / c.width() * grid_cols)),
                               0, grid_cols - 1);
    const int row = std::clamp(static_cast<int>(std::floor((y - c.y_min) / c.height() * grid_rows)),
                               0, grid_rows - 1);
    return row * grid_cols + col;
  }
};

namespace detail {

inline double longest_path(const SceneConfig& cfg, const std::vector<GeneratorZone>& zones) {
  double longest = 0.0;
  // A UE only sees the scatterers of its own tile, and path length is convex
  // in the UE position, so the maximum is attained at a tile corner.
  for (const auto& z : zones) {
    const Rect& c = z.region;
    const Eigen::Vector3d corners[4] = {{c.x_min, c.y_min, cfg.ue_height},
                                        {c.x_min, c.y_max, cfg.ue_height},
                                        {c.x_max, c.y_min, cfg.ue_height},
                                        {c.x_max, c.y_max, cfg.ue_height}};
    for (const auto& ue : corners) {
      longest = std::max(longest, (ue - cfg.bs_position).norm());
      for (const auto& s : z.scatterers)
        longest = std::max(longest, (s.position - cfg.bs_position).norm() + (ue - s.position).norm());
    }
  }
  return longest;
}

}  // namespace detail

inline Scene generate_scene(const SceneConfig& config) {
  config.validate();
  Scene scene;
  scene.config = config;
  const auto [rows, cols] = zone_grid_shape(config.num_generator_zones);
  scene.grid_rows = rows;
  scene.grid_cols = cols;

  Rng rng = make_rng(config.rng_seed, 0x5ce7e);
  const Rect& cell = config.cell;
  const double tw = cell.width() / cols;
  const double th = cell.height() / rows;
  for (int r = 0; r < rows; ++r) {
    for (int q = 0; q < cols; ++q) {
      GeneratorZone zone;
      zone.region = {cell.x_min + q * tw, cell.x_min + (q + 1) * tw, cell.y_min + r * th,
                     cell.y_min + (r + 1) * th};
      const double mx = config.scatterer_margin * tw;
      const double my = config.scatterer_margin * th;
      zone.los_phase = uniform(rng, 0.0, kTwoPi);
      for (int s = 0; s < config.scatterers_per_zone; ++s) {
        Scatterer sc;
        sc.position.x() = uniform(rng, zone.region.x_min - mx, zone.region.x_max + mx);
        sc.position.y() = uniform(rng, zone.region.y_min - my, zone.region.y_max + my);
        sc.position.z() = uniform(rng, 0.0, config.scatterer_height_max);
        sc.phase = uniform(rng, 0.0, kTwoPi);
        zone.scatterers.push_back(sc);
      }
      scene.zones.push_back(std::move(zone));
    }
  }

  const double max_delay = detail::longest_path(config, scene.zones) / kSpeedOfLight;
  require(max_delay < config.max_delay_taps / config.bandwidth, ErrorKind::InvalidConfig,
          "longest path delay exceeds the retained delay window N_c/W");

  const double dx = cell.width() / config.grid_nx;
  const double dy = cell.height() / config.grid_ny;
  scene.ue_grid.reserve(static_cast<std::size_t>(config.grid_nx) * config.grid_ny);
  for (int iy = 0; iy < config.grid_ny; ++iy) {
    for (int ix = 0; ix < config.grid_nx; ++ix) {
      scene.ue_grid.emplace_back(cell.x_min + (ix + 0.5) * dx, cell.y_min + (iy + 0.5) * dy,
                                 config.ue_height);
    }
  }
  return scene;
}

/// Multipath components seen from a UE position, strongest first, capped at
/// config.max_paths.
inline std::vector<PathComponent> channel_paths(const Scene& scene,
                                                const Eigen::Vector3d& ue_position) {
  const SceneConfig& cfg = scene.config;
  require(cfg.cell.contains(ue_position.x(), ue_position.y()), ErrorKind::OutOfDomain,
          "UE position outside the cell");
  const GeneratorZone& zone = scene.zones[scene.zone_of(ue_position.x(), ue_position.y())];
  const double lambda = cfg.wavelength();

  auto make_path = [&](const Eigen::Vector3d& toward, double length, double phase0) {
    const Eigen::Vector3d d = toward - cfg.bs_position;
    PathComponent p;
    p.azimuth = std::atan2(d.y(), d.x());
    p.elevation = std::atan2(d.z(), std::hypot(d.x(), d.y()));
    p.delay = length / kSpeedOfLight;
    p.gain_amplitude = std::pow(length, -cfg.pathloss_exponent / 2.0);
    p.gain_phase = std::fmod(phase0 + kTwoPi * std::fmod(length / lambda, 1.0), kTwoPi);
    return p;
  };

  std::vector<PathComponent> paths;
  paths.reserve(zone.scatterers.size() + 1);
  paths.push_back(make_path(ue_position, (ue_position - cfg.bs_position).norm(), zone.los_phase));
  for (const auto& s : zone.scatterers) {
    const double len = (s.position - cfg.bs_position).norm() + (ue_position - s.position).norm();
    paths.push_back(make_path(s.position, len, s.phase));
  }
  std::stable_sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
    return a.gain_amplitude > b.gain_amplitude;
  });
  if (paths.size() > static_cast<std::size_t>(cfg.max_paths)) paths.resize(cfg.max_paths);
  return paths;
}

inline ChannelSample synthesize_channel(const Scene& scene, const Eigen::Vector3d& ue_position) {
  ChannelSample sample;
  sample.position = ue_position;
  sample.channel = channel_from_paths(scene.config.array, channel_paths(scene, ue_position),
                                      scene.config.num_subcarriers, scene.config.bandwidth);
  return sample;
}

/// Channels for every UE grid point, in grid order.
inline std::vector<ChannelSample> synthesize_grid(const Scene& scene, unsigned threads = 1) {
  std::vector<ChannelSample> out(scene.ue_grid.size());
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = synthesize_channel(scene, scene.ue_grid[i]); });
  return out;
}

// ---------------------------------------------------------------------------
// Karhunen-Loeve zone subspaces: h = V * Lambda^{1/2} * w.

struct ZoneSubspace {
  Eigen::MatrixXcd basis;       // D x r, orthonormal columns
  Eigen::VectorXd eigenvalues;  // r, positive, non-increasing

  int rank() const { return static_cast<int>(eigenvalues.size()); }
  int dimension() const { return static_cast<int>(basis.rows()); }

  void validate() const {
    require(basis.cols() == eigenvalues.size() && eigenvalues.size() >= 1,
            ErrorKind::InvalidArgument, "basis/eigenvalue count mismatch");
    require((eigenvalues.array() > 0.0).all(), ErrorKind::InvalidArgument,
            "eigenvalues must be positive");
    const Eigen::MatrixXcd gram = basis.adjoint() * basis;
    const double dev =
        (gram - Eigen::MatrixXcd::Identity(rank(), rank())).cwiseAbs().maxCoeff();
    require(dev < 1e-10, ErrorKind::InvalidArgument, "basis columns are not orthonormal");
  }
};

/// Random subspace of the given dimension: orthonormalized complex Gaussian
/// columns paired with the supplied eigenvalues.
inline ZoneSubspace random_zone_subspace(int dimension, const Eigen::VectorXd& eigenvalues,
                                         std::uint64_t seed) {
  require(eigenvalues.size() >= 1 && eigenvalues.size() <= dimension, ErrorKind::InvalidArgument,
          "rank must lie in [1, dimension]");
  Rng rng = make_rng(seed, 0x4b4c);
  Eigen::MatrixXcd g(dimension, eigenvalues.size());
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = complex_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  ZoneSubspace out;
  out.basis = qr.householderQ() * Eigen::MatrixXcd::Identity(dimension, eigenvalues.size());
  out.eigenvalues = eigenvalues;
  return out;
}

inline std::vector<Eigen::VectorXcd> generate_kl_channels(const ZoneSubspace& subspace,
                                                          std::size_t count, std::uint64_t seed) {
  subspace.validate();
  Rng rng = make_rng(seed, 0x6b6c);
  const Eigen::MatrixXcd factor = subspace.basis * subspace.eigenvalues.cwiseSqrt().asDiagonal();
  std::vector<Eigen::VectorXcd> out;
  out.reserve(count);
  Eigen::VectorXcd w(subspace.rank());
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < subspace.rank(); ++j) w(j) = complex_normal(rng);
    out.emplace_back(factor * w);
  }
  return out;
}

/// Dominant eigen-subspace of the (uncentered) sample covariance holding at
/// least `energy_fraction` of the total energy.
inline ZoneSubspace estimate_zone_subspace(const std::vector<Eigen::VectorXcd>& channels,
                                           double energy_fraction) {
  require(channels.size() >= 2, ErrorKind::InvalidArgument, "need at least two samples");
  require(energy_fraction > 0.0 && energy_fraction <= 1.0, ErrorKind::InvalidArgument,
          "energy fraction must lie in (0, 1]");
  const Eigen::Index dim = channels.front().size();
  Eigen::MatrixXcd data(dim, static_cast<Eigen::Index>(channels.size()));
  for (std::size_t i = 0; i < channels.size(); ++i) {
    require(channels[i].size() == dim, ErrorKind::DimensionMismatch, "ragged channel set");
    data.col(static_cast<Eigen::Index>(i)) = channels[i];
  }
  require(data.squaredNorm() > 0.0, ErrorKind::DegenerateInput, "all-zero channel set");
  Eigen::MatrixXcd cov = data * data.adjoint() / static_cast<double>(channels.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
  require(eig.info() == Eigen::Success, ErrorKind::NumericFailure, "eigendecomposition failed");

  // Ascending from Eigen; walk from the top.
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double total = values.cwiseMax(0.0).sum();
  const double target = energy_fraction * total * (1.0 - 1e-12);
  double acc = 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = dim - 1; i >= 0; --i) {
    if (values(i) <= 0.0) break;
    acc += values(i);
    ++rank;
    if (acc >= target) break;
  }
  ZoneSubspace out;
  out.basis.resize(dim, rank);
  out.eigenvalues.resize(rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    out.basis.col(j) = eig.eigenvectors().col(dim - 1 - j);
    out.eigenvalues(j) = values(dim - 1 - j);
  }
  return out;
}

}  // namespace zonecsi
