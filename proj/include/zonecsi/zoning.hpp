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

// Position-based spatial zones: k-means clustering of UE ground-plane
// positions, nearest-centroid classification, dataset partitioning, and the
// reconstruction-error oracle that picks the best zone model per sample.
//
// Zone ids are 1-based everywhere in this interface.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/rng.hpp"

namespace zonecsi {

struct ZonePartition {
  std::vector<Eigen::Vector2d> centroids;

  int zones() const { return static_cast<int>(centroids.size()); }
};

/// Nearest centroid; ties go to the smallest zone id.
inline int classify_position(const ZonePartition& partition, const Eigen::Vector2d& x) {
  int best = 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int b = 0; b < partition.zones(); ++b) {
    const double d = (x - partition.centroids[static_cast<std::size_t>(b)]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = b + 1;
    }
  }
  return best;
}

struct KMeansResult {
  ZonePartition partition;
  std::vector<int> assignment;        // zone id per input point
  std::vector<double> inertia_trace;  // after each assignment step
  int iterations = 0;
};

namespace detail {

inline double inertia_of(const std::vector<Eigen::Vector2d>& pts, const ZonePartition& p,
                         const std::vector<int>& assign) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    s += (pts[i] - p.centroids[static_cast<std::size_t>(assign[i] - 1)]).squaredNorm();
  return s;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Stops when assignments are
/// stable or after max_iters; an emptied cluster is re-seeded at the point
/// farthest from its current centroid.
inline KMeansResult kmeans_positions(const std::vector<Eigen::Vector2d>& positions, int zones,
                                     std::uint64_t seed, int max_iters = 100) {
  require(zones >= 1, ErrorKind::InvalidArgument, "zone count must be >= 1");
  require(static_cast<std::size_t>(zones) <= positions.size(), ErrorKind::InvalidArgument,
          "more zones than positions");
  require(max_iters >= 1, ErrorKind::InvalidArgument, "max_iters must be >= 1");
  const std::size_t n = positions.size();
  Rng rng = make_rng(seed, 0x4b4d);

  KMeansResult res;
  auto& cents = res.partition.centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  cents.push_back(positions[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (positions[i] - cents[0]).squaredNorm();
  while (cents.size() < static_cast<std::size_t>(zones)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double r = uniform(rng, 0.0, total);
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        r -= d2[i];
        if (r <= 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // roundoff at the tail
        for (std::size_t i = n; i-- > 0;)
          if (!chosen[i] && d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = true;
    cents.push_back(positions[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (positions[i] - cents.back()).squaredNorm());
  }

  res.assignment.assign(n, 0);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int z = classify_position(res.partition, positions[i]);
      changed = changed || z != res.assignment[i];
      res.assignment[i] = z;
    }
    res.inertia_trace.push_back(detail::inertia_of(positions, res.partition, res.assignment));
    res.iterations = it + 1;
    if (!changed) break;

    std::vector<Eigen::Vector2d> sums(static_cast<std::size_t>(zones), Eigen::Vector2d::Zero());
    std::vector<std::size_t> counts(static_cast<std::size_t>(zones), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(res.assignment[i] - 1)] += positions[i];
      ++counts[static_cast<std::size_t>(res.assignment[i] - 1)];
    }
    for (std::size_t b = 0; b < cents.size(); ++b) {
      if (counts[b] > 0) {
        cents[b] = sums[b] / static_cast<double>(counts[b]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (positions[i] - cents[static_cast<std::size_t>(res.assignment[i] - 1)])
                             .squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      cents[b] = positions[far];
      res.assignment[far] = static_cast<int>(b) + 1;
    }
  }
  return res;
}

/// Member indices per zone (index b-1 holds zone b).
struct ZonedDataset {
  std::vector<std::vector<std::size_t>> members;

  int zones() const { return static_cast<int>(members.size()); }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& m : members) n += m.size();
    return n;
  }
};

inline ZonedDataset partition_dataset(const std::vector<Eigen::Vector2d>& positions,
                                      const ZonePartition& partition) {
  require(partition.zones() >= 1, ErrorKind::InvalidArgument, "partition has no zones");
  ZonedDataset out;
  out.members.resize(static_cast<std::size_t>(partition.zones()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    out.members[static_cast<std::size_t>(classify_position(partition, positions[i]) - 1)]
        .push_back(i);
  require(out.total() == positions.size(), ErrorKind::DegenerateInput,
          "partition does not cover the dataset");
  for (int b = 0; b < out.zones(); ++b)
    require(!out.members[static_cast<std::size_t>(b)].empty(), ErrorKind::EmptyZone,
            "zone " + std::to_string(b + 1) + " received no samples");
  return out;
}

struct ZoneChoice {
  int zone = 1;
  double error = 0.0;  // squared reconstruction error of the chosen model
};

/// For each column of x, the model with the smallest squared reconstruction
/// error (inference mode); ties go to the smallest zone id.
template <class T>
std::vector<ZoneChoice> oracle_zone_assignment(const std::vector<ModelParams<T>>& models,
                                               const Mat<T>& x) {
  require(!models.empty(), ErrorKind::InvalidArgument, "no zone models");
  std::vector<ZoneChoice> best(static_cast<std::size_t>(x.cols()),
                               {1, std::numeric_limits<double>::infinity()});
  for (std::size_t b = 0; b < models.size(); ++b) {
    require(models[b].spec.input_dim == x.rows(), ErrorKind::DimensionMismatch,
            "model input dimension does not match the sample");
    const Mat<T> rec = reconstruct(models[b], x);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double e = static_cast<double>((rec.col(j) - x.col(j)).squaredNorm());
      if (e < best[static_cast<std::size_t>(j)].error) best[static_cast<std::size_t>(j)] = {static_cast<int>(b) + 1, e};
    }
  }
  return best;
}

template <class T>
ZoneChoice oracle_zone_assignment(const std::vector<ModelParams<T>>& models, const Vec<T>& v) {
  return oracle_zone_assignment(models, Mat<T>(v)).front();
}

}  // namespace zonecsi
