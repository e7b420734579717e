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

// NMSE evaluation, empirical CDFs, zone-routed inference, and the method
// comparison table (NMSE, MPTR, MPUR, multiplications, parameters).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zonecsi/autoenc.hpp"
#include "zonecsi/error.hpp"
#include "zonecsi/mobility.hpp"
#include "zonecsi/transform.hpp"
#include "zonecsi/zoning.hpp"

namespace zonecsi {

/// Stand-in for -inf dB in CSV output.
inline constexpr double kDbSentinel = -400.0;

struct Nmse {
  double linear = 0.0;
  double db = 0.0;  // -inf for a perfect estimate
};

inline double to_db(double linear) {
  return linear > 0.0 ? 10.0 * std::log10(linear) : -std::numeric_limits<double>::infinity();
}

template <class A, class B>
Nmse nmse(const Eigen::MatrixBase<A>& target, const Eigen::MatrixBase<B>& estimate) {
  require(target.size() == estimate.size(), ErrorKind::DimensionMismatch,
          "target and estimate lengths differ");
  const double energy = target.template cast<double>().squaredNorm();
  require(energy > 0.0, ErrorKind::UndefinedRatio, "NMSE of an all-zero target");
  const double err =
      (target.template cast<double>() - estimate.template cast<double>()).squaredNorm();
  const double lin = err / energy;
  return {lin, to_db(lin)};
}

inline Nmse nmse(const AngularDelayVector& target, const AngularDelayVector& estimate) {
  return nmse(target.values, estimate.values);
}

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

/// Right-continuous empirical CDF: one point per distinct value with the
/// fraction of samples <= that value.
inline std::vector<CdfPoint> build_cdf(std::vector<double> values) {
  require(!values.empty(), ErrorKind::InvalidArgument, "CDF of an empty sample");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  std::vector<CdfPoint> cdf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    cdf.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  cdf.back().fraction = 1.0;
  return cdf;
}

enum class Routing { Position, Oracle };

struct ZoneBreakdown {
  int zone = 1;
  std::size_t samples = 0;
  double mean_linear = 0.0;
};

struct EvalReport {
  std::vector<double> nmse_linear;
  std::vector<double> nmse_db;
  std::vector<int> routed_zone;
  double mean_linear = 0.0;
  double mean_db = 0.0;          // dB of the mean linear ratio (headline)
  double mean_of_db = 0.0;       // mean of per-sample dB, finite samples only
  std::vector<CdfPoint> cdf;     // over per-sample dB
  std::vector<ZoneBreakdown> zones;
  std::size_t rerouted = 0;      // samples whose zone had no model
};

/// Routes every test column to a zone model, reconstructs in inference mode,
/// and scores NMSE on the unnormalized content. `available[b]` false marks a
/// zone without a model; its samples go to the nearest available centroid.
template <class T>
EvalReport evaluate(const std::vector<ModelParams<T>>& models, const ZonePartition& partition,
                    const Normalizer& normalizer, const Eigen::MatrixXd& test,
                    const std::vector<Eigen::Vector2d>& positions, Routing routing,
                    std::vector<bool> available = {}) {
  require(test.cols() >= 1, ErrorKind::InvalidArgument, "empty test set");
  require(static_cast<int>(models.size()) == partition.zones(), ErrorKind::DimensionMismatch,
          "one model per zone required");
  require(routing == Routing::Oracle || positions.size() == static_cast<std::size_t>(test.cols()),
          ErrorKind::DimensionMismatch, "one position per test sample required");
  if (available.empty()) available.assign(models.size(), true);
  require(std::find(available.begin(), available.end(), true) != available.end(),
          ErrorKind::EmptyZone, "no zone model available");

  const Mat<T> x = (test / normalizer.scale).cast<T>();
  EvalReport rep;
  const auto n = static_cast<std::size_t>(test.cols());
  rep.routed_zone.assign(n, 1);
  Mat<T> recon(x.rows(), x.cols());

  if (routing == Routing::Oracle) {
    std::vector<ModelParams<T>> usable;
    std::vector<int> ids;
    for (std::size_t b = 0; b < models.size(); ++b)
      if (available[b]) {
        usable.push_back(models[b]);
        ids.push_back(static_cast<int>(b) + 1);
      }
    const auto choice = oracle_zone_assignment(usable, x);
    for (std::size_t j = 0; j < n; ++j)
      rep.routed_zone[j] = ids[static_cast<std::size_t>(choice[j].zone - 1)];
  } else {
    ZonePartition avail_part;
    std::vector<int> ids;
    for (std::size_t b = 0; b < models.size(); ++b)
      if (available[b]) {
        avail_part.centroids.push_back(partition.centroids[b]);
        ids.push_back(static_cast<int>(b) + 1);
      }
    for (std::size_t j = 0; j < n; ++j) {
      int z = classify_position(partition, positions[j]);
      if (!available[static_cast<std::size_t>(z - 1)]) {
        z = ids[static_cast<std::size_t>(classify_position(avail_part, positions[j]) - 1)];
        ++rep.rerouted;
      }
      rep.routed_zone[j] = z;
    }
  }

  for (int b = 1; b <= partition.zones(); ++b) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < n; ++j)
      if (rep.routed_zone[j] == b) cols.push_back(static_cast<Eigen::Index>(j));
    if (cols.empty()) continue;
    const Mat<T> sub = x(Eigen::all, cols);
    recon(Eigen::all, cols) = reconstruct(models[static_cast<std::size_t>(b - 1)], sub);
  }

  rep.nmse_linear.resize(n);
  rep.nmse_db.resize(n);
  double sum = 0.0, sum_db = 0.0;
  std::size_t finite = 0;
  std::vector<double> zone_sum(static_cast<std::size_t>(partition.zones()), 0.0);
  std::vector<std::size_t> zone_n(static_cast<std::size_t>(partition.zones()), 0);
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::VectorXd est = normalizer.invert(recon.col(static_cast<Eigen::Index>(j)).template cast<double>());
    const Nmse e = nmse(test.col(static_cast<Eigen::Index>(j)), est);
    rep.nmse_linear[j] = e.linear;
    rep.nmse_db[j] = e.db;
    sum += e.linear;
    if (std::isfinite(e.db)) {
      sum_db += e.db;
      ++finite;
    }
    zone_sum[static_cast<std::size_t>(rep.routed_zone[j] - 1)] += e.linear;
    ++zone_n[static_cast<std::size_t>(rep.routed_zone[j] - 1)];
  }
  rep.mean_linear = sum / static_cast<double>(n);
  rep.mean_db = to_db(rep.mean_linear);
  rep.mean_of_db = finite > 0 ? sum_db / static_cast<double>(finite)
                              : -std::numeric_limits<double>::infinity();
  rep.cdf = build_cdf(rep.nmse_db);
  for (int b = 0; b < partition.zones(); ++b) {
    const auto cnt = zone_n[static_cast<std::size_t>(b)];
    rep.zones.push_back({b + 1, cnt, cnt ? zone_sum[static_cast<std::size_t>(b)] / static_cast<double>(cnt) : 0.0});
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Comparison table

struct ReportRow {
  std::string method;
  LayerSpec spec;
  int zones = 1;
  double mean_nmse_db = 0.0;
  double mptr = 0.0;
  double mpur = 0.0;
  std::int64_t multiplications = 0;  // per feedback, one encoder
  std::int64_t params_encoder = 0;   // all zones
  std::int64_t params_total = 0;     // all zones
};

struct ExperimentResult {
  std::string method;
  LayerSpec spec;
  int zones = 1;
  double mean_nmse_db = 0.0;
  OverheadReport overhead;
};

inline std::vector<ReportRow> comparison_report(const std::vector<ExperimentResult>& results) {
  std::vector<ReportRow> rows;
  for (const auto& r : results) {
    if (!rows.empty()) {
      require(r.spec.input_dim == rows.front().spec.input_dim &&
                  r.spec.codeword_len == rows.front().spec.codeword_len,
              ErrorKind::DimensionMismatch,
              "methods disagree on input dimension or codeword length");
    }
    const ParameterCount pc = count_parameters(r.spec);
    ReportRow row;
    row.method = r.method;
    row.spec = r.spec;
    row.zones = r.zones;
    row.mean_nmse_db = r.mean_nmse_db;
    row.mptr = r.overhead.mptr;
    row.mpur = r.overhead.mpur;
    row.multiplications = count_multiplications(r.spec).encoder;
    row.params_encoder = pc.encoder * r.zones;
    row.params_total = pc.total * r.zones;
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_db(double db) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << (std::isfinite(db) ? db : kDbSentinel);
  return os.str();
}

/// 1234567 -> "1,234,567"
inline std::string with_commas(std::int64_t v) {
  std::string digits = std::to_string(v < 0 ? -v : v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return v < 0 ? "-" + out : out;
}

inline std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "method,mean_nmse_db,mptr_params_per_s,mpur_per_s,multiplications,params_encoder,"
        "params_total\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_db(r.mean_nmse_db) << ',' << std::fixed << std::setprecision(2)
       << r.mptr << ',' << std::setprecision(6) << r.mpur << ',' << r.multiplications << ','
       << r.params_encoder << ',' << r.params_total << '\n';
  }
  return os.str();
}

inline std::string report_table(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(22) << "Method" << std::setw(14) << "Mean NMSE" << std::setw(20)
     << "MPTR" << std::setw(12) << "MPUR" << std::setw(16) << "Multiplications"
     << "Parameters\n";
  for (const auto& r : rows) {
    std::ostringstream mptr, mpur;
    mptr << std::fixed << std::setprecision(2) << r.mptr << " param/s";
    mpur << std::setprecision(4) << r.mpur << "/s";
    os << std::left << std::setw(22) << r.method << std::setw(14) << (format_db(r.mean_nmse_db) + " dB")
       << std::setw(20) << mptr.str() << std::setw(12) << (r.mpur == 0.0 ? std::string("0") : mpur.str())
       << std::setw(16) << with_commas(r.multiplications)
       << with_commas(r.params_encoder) + " / " + with_commas(r.params_total) << '\n';
  }
  return os.str();
}

inline std::string cdf_csv(const std::vector<CdfPoint>& cdf) {
  std::ostringstream os;
  os << "nmse_db,cdf\n" << std::setprecision(10);
  for (const auto& p : cdf)
    os << (std::isfinite(p.value) ? p.value : kDbSentinel) << ',' << p.fraction << '\n';
  return os.str();
}

}  // namespace zonecsi
