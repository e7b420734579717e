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

// UE mobility, spatial-zone switch counting, and the model download /
// update rates (MPTR, MPUR) under encoder caching policies.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <optional>
#include <string>
#include <vector>

#include "zonecsi/error.hpp"
#include "zonecsi/rng.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/zoning.hpp"

namespace zonecsi {

struct MobilityConfig {
  double speed = 10.0 / 3.6;  // m/s
  double horizon = 3600.0;    // s
  double dt = 1.0;            // s
  Rect region{100.0, 260.0, -80.0, 80.0};
  std::uint64_t seed = 1;

  void validate() const {
    require(speed > 0.0, ErrorKind::InvalidConfig, "speed must be positive");
    require(dt > 0.0, ErrorKind::InvalidConfig, "sample interval must be positive");
    require(horizon >= dt, ErrorKind::InvalidConfig, "horizon must be at least one interval");
    require(region.width() > 0.0 && region.height() > 0.0, ErrorKind::InvalidConfig,
            "mobility region has zero area");
  }
};

struct TrajectoryPoint {
  double time = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

using Trajectory = std::vector<TrajectoryPoint>;

/// Random-waypoint walk sampled every dt for floor(T/dt)+1 samples. Distance
/// left over on reaching a waypoint carries on toward the next one, so the
/// path length is exactly speed * (t_P - t_1).
inline Trajectory simulate_trajectory(const MobilityConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, 0x30b1);
  const Rect& r = cfg.region;
  auto draw = [&] {
    const double x = uniform(rng, r.x_min, r.x_max);
    const double y = uniform(rng, r.y_min, r.y_max);
    return Eigen::Vector2d(x, y);
  };
  const auto samples = static_cast<std::size_t>(std::floor(cfg.horizon / cfg.dt)) + 1;
  Trajectory traj;
  traj.reserve(samples);
  Eigen::Vector2d pos = draw();
  Eigen::Vector2d dest = draw();
  traj.push_back({0.0, pos});
  const double step = cfg.speed * cfg.dt;
  for (std::size_t p = 1; p < samples; ++p) {
    double budget = step;
    while (budget > 0.0) {
      const Eigen::Vector2d delta = dest - pos;
      const double dist = delta.norm();
      if (dist > budget) {
        pos += delta * (budget / dist);
        budget = 0.0;
      } else {
        pos = dest;
        budget -= dist;
        dest = draw();
      }
    }
    traj.push_back({static_cast<double>(p) * cfg.dt, pos});
  }
  return traj;
}

inline double path_length(const Trajectory& traj) {
  double len = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i)
    len += (traj[i].position - traj[i - 1].position).norm();
  return len;
}

inline std::vector<int> zone_sequence(const Trajectory& traj, const ZonePartition& partition) {
  std::vector<int> zones;
  zones.reserve(traj.size());
  for (const auto& p : traj) zones.push_back(classify_position(partition, p.position));
  return zones;
}

struct SwitchStats {
  std::int64_t switches = 0;  // N_zs
  double horizon = 0.0;       // t_P - t_1
  double rate = 0.0;          // r_zs = N_zs / horizon
  std::optional<double> mean_dwell;  // horizon / N_zs, absent when N_zs = 0
};

inline SwitchStats count_zone_switches(const std::vector<int>& zones, double horizon) {
  require(zones.size() >= 2, ErrorKind::InvalidArgument,
          "switch counting needs at least two samples");
  require(horizon > 0.0, ErrorKind::InvalidArgument, "horizon must be positive");
  SwitchStats s;
  for (std::size_t i = 1; i < zones.size(); ++i)
    if (zones[i] != zones[i - 1]) ++s.switches;
  s.horizon = horizon;
  s.rate = static_cast<double>(s.switches) / horizon;
  if (s.switches > 0) s.mean_dwell = horizon / static_cast<double>(s.switches);
  return s;
}

inline SwitchStats count_zone_switches(const Trajectory& traj, const ZonePartition& partition) {
  require(traj.size() >= 2, ErrorKind::InvalidArgument,
          "switch counting needs at least two samples");
  return count_zone_switches(zone_sequence(traj, partition),
                             traj.back().time - traj.front().time);
}

enum class CachePolicy { DownloadAllOnce, PerSwitch, Lru };

inline const char* to_string(CachePolicy p) {
  switch (p) {
    case CachePolicy::DownloadAllOnce: return "download-all-once";
    case CachePolicy::PerSwitch: return "per-switch";
    case CachePolicy::Lru: return "cache";
  }
  return "unknown";
}

/// Misses of a least-recently-used cache of `capacity` encoders replaying a
/// zone sequence; the first access to a zone is a miss.
inline std::int64_t lru_misses(const std::vector<int>& zones, int capacity) {
  require(capacity >= 1, ErrorKind::InvalidArgument, "cache capacity must be >= 1");
  std::list<int> cache;  // front = most recent
  std::int64_t misses = 0;
  for (int z : zones) {
    auto it = std::find(cache.begin(), cache.end(), z);
    if (it != cache.end()) {
      cache.splice(cache.begin(), cache, it);
      continue;
    }
    ++misses;
    cache.push_front(z);
    if (cache.size() > static_cast<std::size_t>(capacity)) cache.pop_back();
  }
  return misses;
}

struct OverheadReport {
  CachePolicy policy = CachePolicy::DownloadAllOnce;
  std::int64_t payload = 0;  // encoder parameters per zone model (V)
  int zones = 1;             // B
  int cache_capacity = 1;
  std::int64_t downloads = 0;
  double horizon = 0.0;        // T
  double mpur = 0.0;           // per second
  double mptr = 0.0;           // parameters per second
  double download_rate = 0.0;  // r_md
  double update_rate = 0.0;    // r_mu: encoder activations (initial + switches) per second
};

/// MPUR is the zone-switch rate regardless of policy. MPTR is V times the
/// download rate: download-all-once fetches all B encoders once over T;
/// per-switch and cache(c) replay the zone sequence and count LRU misses.
inline OverheadReport compute_overhead(std::int64_t payload, int zones, const SwitchStats& stats,
                                       const std::vector<int>& zone_seq, CachePolicy policy,
                                       double horizon, int cache_capacity = 1) {
  require(payload >= 0 && zones >= 1, ErrorKind::InvalidArgument, "bad payload or zone count");
  require(horizon > 0.0, ErrorKind::InvalidArgument, "horizon must be positive");
  OverheadReport r;
  r.policy = policy;
  r.payload = payload;
  r.zones = zones;
  r.horizon = horizon;
  r.mpur = stats.rate;
  r.update_rate = static_cast<double>(1 + stats.switches) / horizon;
  switch (policy) {
    case CachePolicy::DownloadAllOnce:
      r.cache_capacity = zones;
      r.downloads = zones;
      break;
    case CachePolicy::PerSwitch:
      r.cache_capacity = 1;
      r.downloads = zone_seq.empty() ? 1 + stats.switches : lru_misses(zone_seq, 1);
      break;
    case CachePolicy::Lru:
      require(cache_capacity >= 1 && cache_capacity <= zones, ErrorKind::InvalidArgument,
              "cache capacity must lie in [1, B]");
      require(!zone_seq.empty(), ErrorKind::InvalidArgument, "cache policy needs the zone sequence");
      r.cache_capacity = cache_capacity;
      r.downloads = lru_misses(zone_seq, cache_capacity);
      break;
  }
  r.download_rate = static_cast<double>(r.downloads) / horizon;
  r.mptr = static_cast<double>(payload) * static_cast<double>(r.downloads) / horizon;
  return r;
}

struct SwitchSummary {
  double mean_switches = 0.0;
  double std_switches = 0.0;
  double mean_rate = 0.0;
  std::vector<SwitchStats> runs;
};

/// Estimates E[N_zs] by averaging independent trajectories (seeds derived
/// from cfg.seed).
inline SwitchSummary summarize_switching(const MobilityConfig& cfg, const ZonePartition& partition,
                                         int repeats) {
  require(repeats >= 1, ErrorKind::InvalidArgument, "repeats must be >= 1");
  SwitchSummary s;
  for (int i = 0; i < repeats; ++i) {
    MobilityConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    s.runs.push_back(count_zone_switches(simulate_trajectory(c), partition));
  }
  double sum = 0.0, sq = 0.0, rate = 0.0;
  for (const auto& r : s.runs) {
    sum += static_cast<double>(r.switches);
    sq += static_cast<double>(r.switches) * static_cast<double>(r.switches);
    rate += r.rate;
  }
  const double n = repeats;
  s.mean_switches = sum / n;
  s.std_switches = repeats > 1 ? std::sqrt(std::max(0.0, (sq - sum * sum / n) / (n - 1))) : 0.0;
  s.mean_rate = rate / n;
  return s;
}

}  // namespace zonecsi
