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

// Angular-delay transform, truncation to the first N_c delay taps, and the
// real-valued vectorization consumed by the autoencoder.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <type_traits>
#include <vector>

#include "zonecsi/error.hpp"

namespace zonecsi {

/// Unitary DFT matrix: entry (p, q) = exp(-j 2 pi p q / n) / sqrt(n).
inline Eigen::MatrixXcd unitary_dft(int n) {
  require(n >= 1, ErrorKind::InvalidArgument, "DFT size must be >= 1");
  Eigen::MatrixXcd f(n, n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      // Reduce p*q mod n first so large indices keep full phase precision.
      const auto pq = static_cast<std::int64_t>(p) * q % n;
      f(p, q) = std::polar(norm, -2.0 * M_PI * static_cast<double>(pq) / n);
    }
  }
  return f;
}

/// F_a * H * F_d^H for an N_t x K frequency-domain channel.
inline Eigen::MatrixXcd to_angular_delay(const Eigen::MatrixXcd& h) {
  require(h.rows() >= 1 && h.cols() >= 1, ErrorKind::DimensionMismatch, "empty channel matrix");
  return unitary_dft(static_cast<int>(h.rows())) * h *
         unitary_dft(static_cast<int>(h.cols())).adjoint();
}

/// Inverse of to_angular_delay: F_a^H * H * F_d.
inline Eigen::MatrixXcd from_angular_delay(const Eigen::MatrixXcd& h) {
  require(h.rows() >= 1 && h.cols() >= 1, ErrorKind::DimensionMismatch, "empty channel matrix");
  return unitary_dft(static_cast<int>(h.rows())).adjoint() * h *
         unitary_dft(static_cast<int>(h.cols()));
}

struct AngularDelayVector {
  Eigen::VectorXd values;  // [real parts row-major, imaginary parts row-major]
  int n_t = 0;
  int n_c = 0;

  Eigen::Index size() const { return values.size(); }
};

inline AngularDelayVector truncate_and_vectorize(const Eigen::MatrixXcd& h, int n_c) {
  require(n_c >= 1 && n_c <= h.cols(), ErrorKind::InvalidArgument,
          "N_c must lie in [1, K]");
  const auto n_t = static_cast<int>(h.rows());
  AngularDelayVector v;
  v.n_t = n_t;
  v.n_c = n_c;
  const Eigen::Index half = static_cast<Eigen::Index>(n_t) * n_c;
  v.values.resize(2 * half);
  for (int r = 0; r < n_t; ++r) {
    for (int c = 0; c < n_c; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * n_c + c;
      v.values(i) = h(r, c).real();
      v.values(half + i) = h(r, c).imag();
    }
  }
  return v;
}

/// Right inverse of truncate_and_vectorize: delay columns N_c..K-1 are zero.
inline Eigen::MatrixXcd devectorize_and_embed(const AngularDelayVector& v, int num_subcarriers) {
  const Eigen::Index half = static_cast<Eigen::Index>(v.n_t) * v.n_c;
  require(v.values.size() == 2 * half, ErrorKind::DimensionMismatch,
          "vector length does not match 2*N_t*N_c");
  require(num_subcarriers >= v.n_c, ErrorKind::InvalidArgument, "K must be >= N_c");
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(v.n_t, num_subcarriers);
  for (int r = 0; r < v.n_t; ++r) {
    for (int c = 0; c < v.n_c; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * v.n_c + c;
      h(r, c) = {v.values(i), v.values(half + i)};
    }
  }
  return h;
}

/// Frequency-domain channel -> truncated angular-delay vector, computing only
/// the retained delay taps.
class AngularDelayTransform {
 public:
  AngularDelayTransform(int n_t, int num_subcarriers, int n_c)
      : n_t_(n_t), k_(num_subcarriers), n_c_(n_c) {
    require(n_c >= 1 && n_c <= num_subcarriers, ErrorKind::InvalidArgument,
            "N_c must lie in [1, K]");
    fa_ = unitary_dft(n_t);
    fd_h_ = unitary_dft(num_subcarriers).adjoint().leftCols(n_c);
  }

  int n_t() const { return n_t_; }
  int num_subcarriers() const { return k_; }
  int n_c() const { return n_c_; }
  Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(n_t_) * n_c_; }

  AngularDelayVector operator()(const Eigen::MatrixXcd& h) const {
    require(h.rows() == n_t_ && h.cols() == k_, ErrorKind::DimensionMismatch,
            "channel shape does not match the configured (N_t, K)");
    const Eigen::MatrixXcd ad = fa_ * h * fd_h_;
    return truncate_and_vectorize(ad, n_c_);
  }

  /// Fraction of channel energy kept by truncation.
  double retained_energy(const Eigen::MatrixXcd& h) const {
    const double total = h.squaredNorm();
    if (total == 0.0) return 1.0;
    return (fa_ * h * fd_h_).squaredNorm() / total;
  }

 private:
  int n_t_;
  int k_;
  int n_c_;
  Eigen::MatrixXcd fa_;
  Eigen::MatrixXcd fd_h_;
};

/// Complex vector (row-major truncated matrix) -> [real; imag].
inline Eigen::VectorXd complex_to_real(const Eigen::VectorXcd& h) {
  Eigen::VectorXd out(2 * h.size());
  out.head(h.size()) = h.real();
  out.tail(h.size()) = h.imag();
  return out;
}

struct Normalizer {
  double scale = 1.0;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return v / scale; }
  Eigen::VectorXd invert(const Eigen::VectorXd& v) const { return v * scale; }
};

/// scale = max |entry| over the training set.
template <class Range>
  requires(!std::is_base_of_v<Eigen::EigenBase<Range>, Range>)
Normalizer fit_normalizer(const Range& training) {
  double scale = 0.0;
  bool any = false;
  for (const auto& v : training) {
    any = true;
    if (v.size() > 0) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  }
  require(any, ErrorKind::DegenerateInput, "empty training set");
  require(scale > 0.0, ErrorKind::DegenerateInput, "training set is all zero");
  return Normalizer{scale};
}

inline Normalizer fit_normalizer(const Eigen::MatrixXd& columns) {
  require(columns.size() > 0, ErrorKind::DegenerateInput, "empty training set");
  const double scale = columns.cwiseAbs().maxCoeff();
  require(scale > 0.0, ErrorKind::DegenerateInput, "training set is all zero");
  return Normalizer{scale};
}

/// scale = root-mean-square entry over the training set, so training inputs
/// have unit average power.
inline Normalizer fit_rms_normalizer(const Eigen::MatrixXd& columns) {
  require(columns.size() > 0, ErrorKind::DegenerateInput, "empty training set");
  const double scale = std::sqrt(columns.squaredNorm() / static_cast<double>(columns.size()));
  require(scale > 0.0, ErrorKind::DegenerateInput, "training set is all zero");
  return Normalizer{scale};
}

enum class NormalizerKind { MaxAbs, Rms };

inline Normalizer fit_normalizer(const Eigen::MatrixXd& columns, NormalizerKind kind) {
  return kind == NormalizerKind::Rms ? fit_rms_normalizer(columns) : fit_normalizer(columns);
}

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// gamma = L / (2 N_t N_c), reduced.
inline Rational compression_rate(std::int64_t codeword_len, std::int64_t n_t, std::int64_t n_c) {
  require(codeword_len > 0 && n_t > 0 && n_c > 0, ErrorKind::InvalidArgument,
          "compression rate arguments must be positive");
  const std::int64_t den = 2 * n_t * n_c;
  const std::int64_t g = std::gcd(codeword_len, den);
  return {codeword_len / g, den / g};
}

}  // namespace zonecsi
