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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "zonecsi/error.hpp"
#include "zonecsi/rng.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/transform.hpp"

using namespace zonecsi;
using cd = std::complex<double>;

namespace {

Eigen::MatrixXcd random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng = make_rng(seed, 1);
  Eigen::MatrixXcd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_normal(rng);
  return m;
}

// Plain DFT sum, independent of the matrix implementation.
Eigen::MatrixXcd dft2_by_sums(const Eigen::MatrixXcd& x) {
  const auto n = x.rows(), k = x.cols();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, k);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < k; ++q)
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < k; ++b)
          out(p, q) += x(a, b) * std::polar(1.0, -2 * M_PI * double(p * a) / double(n)) *
                       std::polar(1.0, 2 * M_PI * double(b * q) / double(k));
  return out / std::sqrt(double(n * k));
}

}  // namespace

TEST(UnitaryDft, SmallClosedForms) {
  EXPECT_NEAR(std::abs(unitary_dft(1)(0, 0) - cd(1, 0)), 0.0, 1e-15);
  const auto f2 = unitary_dft(2);
  const double s = 1 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(f2(0, 0) - s), 0, 1e-15);
  EXPECT_NEAR(std::abs(f2(0, 1) - s), 0, 1e-15);
  EXPECT_NEAR(std::abs(f2(1, 0) - s), 0, 1e-15);
  EXPECT_NEAR(std::abs(f2(1, 1) + s), 0, 1e-15);
}

TEST(UnitaryDft, Unitarity) {
  for (int n : {8, 64}) {
    const auto f = unitary_dft(n);
    EXPECT_LT((f.adjoint() * f - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(UnitaryDft, ZeroRejected) {
  EXPECT_THROW(unitary_dft(0), Error);
}

TEST(AngularDelay, MatchesDirectSums) {
  const auto x = random_matrix(5, 6, 2);
  EXPECT_LT((to_angular_delay(x) - dft2_by_sums(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AngularDelay, ParsevalAndInverse) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_matrix(64, 64, seed);
    const auto y = to_angular_delay(x);
    EXPECT_NEAR(y.norm() / x.norm(), 1.0, 1e-10);
    EXPECT_LT((from_angular_delay(y) - x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_EQ(to_angular_delay(Eigen::MatrixXcd::Zero(4, 4)).norm(), 0.0);
}

TEST(AngularDelay, BroadsideZeroDelayConcentratesInFirstBin) {
  const ArrayGeometry ula{16, 1, 0.5};
  const auto h = channel_from_paths(ula, {{1.0, 0.0, 0.0, 0.0, 0.0}}, 16, 20e6);
  const auto y = to_angular_delay(h);
  EXPECT_GE(y.col(0).squaredNorm() / y.squaredNorm(), 0.99);
  Eigen::Index bin;
  y.col(0).cwiseAbs().maxCoeff(&bin);
  EXPECT_EQ(bin, 0);
}

TEST(Truncation, FullWidthRoundTrip) {
  const auto x = random_matrix(4, 8, 3);
  const auto v = truncate_and_vectorize(x, 8);
  EXPECT_LT((devectorize_and_embed(v, 8) - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Truncation, LayoutIsRealThenImagRowMajor) {
  Eigen::MatrixXcd x(2, 3);
  x << cd(1, 7), cd(2, 8), cd(3, 9), cd(4, 10), cd(5, 11), cd(6, 12);
  const auto v = truncate_and_vectorize(x, 2);
  Eigen::VectorXd expect(8);
  expect << 1, 2, 4, 5, 7, 8, 10, 11;
  EXPECT_EQ(v.values, expect);
}

TEST(Truncation, ColumnZeroOnlyRoundTrips) {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(4, 8);
  x.col(0) = random_matrix(4, 1, 5);
  for (int nc : {1, 3, 8}) EXPECT_EQ(devectorize_and_embed(truncate_and_vectorize(x, nc), 8), x);
}

TEST(Truncation, RetainedEnergyIsColumnSum) {
  const auto x = random_matrix(8, 16, 6);
  const auto v = truncate_and_vectorize(x, 8);
  double direct = 0;
  for (int c = 0; c < 8; ++c) direct += x.col(c).squaredNorm();
  EXPECT_NEAR(v.values.squaredNorm(), direct, 1e-12 * direct);
}

TEST(Truncation, LinearAndRejectsWideNc) {
  const auto a = random_matrix(4, 6, 7), b = random_matrix(4, 6, 8);
  const auto va = truncate_and_vectorize(a, 3).values, vb = truncate_and_vectorize(b, 3).values;
  EXPECT_LT((truncate_and_vectorize(2.0 * a - b, 3).values - (2.0 * va - vb)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(truncate_and_vectorize(a, 7), Error);
}

TEST(Transform, MatchesFullPipeline) {
  const auto x = random_matrix(8, 16, 9);
  const AngularDelayTransform tf(8, 16, 4);
  const auto v = tf(x);
  EXPECT_EQ(v.size(), tf.dim());
  EXPECT_LT((v.values - truncate_and_vectorize(to_angular_delay(x), 4).values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(tf.retained_energy(x), v.values.squaredNorm() / x.squaredNorm(), 1e-12);
  EXPECT_THROW(tf(random_matrix(8, 15, 1)), Error);
}

TEST(Normalizer, MaxAbsScale) {
  Eigen::MatrixXd m(2, 1);
  m << 2, -4;
  const auto n = fit_normalizer(m);
  EXPECT_EQ(n.scale, 4.0);
  Eigen::VectorXd expect(2);
  expect << 0.5, -1.0;
  EXPECT_EQ(n.apply(m.col(0)), expect);
}

TEST(Normalizer, InvertApplyIdentity) {
  Rng rng = make_rng(1, 2);
  Eigen::MatrixXd m(10, 20);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -3, 3);
  const auto n = fit_normalizer(m);
  EXPECT_LE(n.apply(m.col(3)).cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LT((n.invert(n.apply(m.col(3))) - m.col(3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Normalizer, ZeroAndEmptyAreDegenerate) {
  try {
    fit_normalizer(Eigen::MatrixXd::Zero(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateInput);
  }
  EXPECT_THROW(fit_normalizer(std::vector<Eigen::VectorXd>{}), Error);
}

TEST(CompressionRate, Values) {
  EXPECT_EQ(compression_rate(64, 64, 32), (Rational{1, 64}));
  EXPECT_EQ(compression_rate(2 * 4 * 3, 4, 3), (Rational{1, 1}));
  EXPECT_EQ(compression_rate(1, 1, 1), (Rational{1, 2}));
}
