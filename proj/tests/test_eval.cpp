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

#include "zonecsi/eval.hpp"
#include "zonecsi/rng.hpp"

using namespace zonecsi;

namespace {

Eigen::MatrixXd random_cols(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, 5);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1, 1);
  return m;
}

// Decoder bias equals `v`, every weight zero: reconstructs v from any input.
ModelParams<double> constant_model(const LayerSpec& s, const Vec<double>& v) {
  auto m = ModelParams<double>::zeros(s);
  m.bn1.running_var.setOnes();
  m.bn2.running_var.setOnes();
  m.fc4.bias = v;
  return m;
}

}  // namespace

TEST(Nmse, BasicCases) {
  Eigen::VectorXd t(3);
  t << 1, -2, 2;
  const auto same = nmse(t, t);
  EXPECT_EQ(same.linear, 0.0);
  EXPECT_TRUE(std::isinf(same.db) && same.db < 0);
  const auto zero = nmse(t, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(zero.linear, 1.0);
  EXPECT_EQ(zero.db, 0.0);
  const Eigen::VectorXd twice = 2 * t;
  EXPECT_EQ(nmse(t, twice).linear, 1.0);
}

TEST(Nmse, ZeroTargetAndLengthMismatch) {
  try {
    nmse(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedRatio);
  }
  EXPECT_THROW(nmse(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(4)), Error);
}

TEST(Nmse, ScaleInvariant) {
  const auto t = random_cols(50, 1, 1), e = random_cols(50, 1, 2);
  const Normalizer n{0.37};
  EXPECT_NEAR(nmse(t, e).linear, nmse(n.apply(t.col(0)), n.apply(e.col(0))).linear, 1e-12);
}

TEST(Cdf, SmallCases) {
  const auto c = build_cdf({3, 1, 2});
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].value, 1);
  EXPECT_DOUBLE_EQ(c[0].fraction, 1.0 / 3);
  EXPECT_DOUBLE_EQ(c[1].fraction, 2.0 / 3);
  EXPECT_EQ(c[2].fraction, 1.0);
  const auto flat = build_cdf({5, 5, 5});
  ASSERT_EQ(flat.size(), 1u);
  EXPECT_EQ(flat[0].fraction, 1.0);
  EXPECT_THROW(build_cdf({}), Error);
}

TEST(Cdf, MatchesBruteForceCount) {
  Rng rng = make_rng(3, 3);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::round(uniform(rng, -30, 0)));
  const auto c = build_cdf(v);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) {
      EXPECT_GT(c[i].value, c[i - 1].value);
      EXPECT_GE(c[i].fraction, c[i - 1].fraction);
    }
    const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x <= c[i].value; });
    EXPECT_DOUBLE_EQ(c[i].fraction, double(below) / double(v.size()));
  }
}

TEST(Evaluate, PerfectStubGivesZeroAndSentinelCdf) {
  const LayerSpec s{4, 1, 1, Activation::Linear};
  Eigen::MatrixXd test(4, 3);
  test.setZero();
  test.col(0) << 1, 2, 3, 4;
  test.col(1) = test.col(0);
  test.col(2) = test.col(0);
  const Normalizer n{4.0};
  const std::vector<ModelParams<double>> models{constant_model(s, n.apply(test.col(0)))};
  const ZonePartition p{{{0, 0}}};
  const std::vector<Eigen::Vector2d> pos(3, Eigen::Vector2d::Zero());
  const auto r = evaluate(models, p, n, test, pos, Routing::Position);
  EXPECT_EQ(r.mean_linear, 0.0);
  ASSERT_EQ(r.cdf.size(), 1u);
  EXPECT_TRUE(std::isinf(r.cdf[0].value));
  EXPECT_NE(cdf_csv(r.cdf).find("-400,1"), std::string::npos);
}

TEST(Evaluate, SingleZoneIsPlainEvaluation) {
  const LayerSpec s{6, 2, 2, Activation::Saturating};
  const auto m = init_model<double>(s, 1);
  const auto test = random_cols(6, 20, 4);
  const Normalizer n{2.0};
  const std::vector<Eigen::Vector2d> pos(20, Eigen::Vector2d(1, 1));
  const auto r = evaluate<double>({m}, ZonePartition{{{0, 0}}}, n, test, pos, Routing::Position);
  const Mat<double> rec = reconstruct(m, Mat<double>(test / 2.0)) * 2.0;
  double sum = 0;
  for (int j = 0; j < 20; ++j) sum += nmse(test.col(j), rec.col(j)).linear;
  EXPECT_NEAR(r.mean_linear, sum / 20, 1e-12);
  EXPECT_NEAR(r.mean_db, to_db(sum / 20), 1e-9);
}

TEST(Evaluate, OracleDominatesPositionRouting) {
  const LayerSpec s{8, 2, 2, Activation::Saturating};
  std::vector<ModelParams<double>> models;
  for (int b = 0; b < 4; ++b) models.push_back(init_model<double>(s, 10 + b));
  const ZonePartition p{{{0, 0}, {10, 0}, {0, 10}, {10, 10}}};
  const auto test = random_cols(8, 60, 5);
  Rng rng = make_rng(6, 6);
  std::vector<Eigen::Vector2d> pos;
  for (int i = 0; i < 60; ++i) pos.emplace_back(uniform(rng, 0, 10), uniform(rng, 0, 10));
  const auto a = evaluate(models, p, Normalizer{1.0}, test, pos, Routing::Position);
  const auto o = evaluate(models, p, Normalizer{1.0}, test, pos, Routing::Oracle);
  EXPECT_LE(o.mean_linear, a.mean_linear);
  for (int j = 0; j < 60; ++j) EXPECT_LE(o.nmse_linear[j], a.nmse_linear[j] * (1 + 1e-12));
}

TEST(Evaluate, MissingZoneIsReroutedAndCounted) {
  const LayerSpec s{4, 1, 1, Activation::Linear};
  const auto m = init_model<double>(s, 1);
  const ZonePartition p{{{0, 0}, {10, 0}}};
  const auto test = random_cols(4, 4, 7);
  const std::vector<Eigen::Vector2d> pos{{0, 0}, {1, 0}, {9, 0}, {10, 0}};
  const auto r = evaluate<double>({m, m}, p, Normalizer{1.0}, test, pos, Routing::Position, {true, false});
  EXPECT_EQ(r.rerouted, 2u);
  for (int z : r.routed_zone) EXPECT_EQ(z, 1);
}

TEST(Report, TableTwoRows) {
  const LayerSpec s16 = LayerSpec::from_dims(64, 32, 64, 16);
  const LayerSpec s128 = LayerSpec::from_dims(64, 32, 64, 128);
  OverheadReport o1;
  o1.mptr = 4262976.0 / 3600;
  OverheadReport o8;
  o8.mptr = 8 * 4262976.0 / 3600;
  o8.mpur = 0.0147;
  const auto rows = comparison_report({{"1-zone (beta=16)", s16, 1, -10, o1},
                                       {"1-zone (beta=128)", s128, 1, -12, o1},
                                       {"8-zone (beta=16)", s16, 8, -15, o8}});
  EXPECT_EQ(rows[0].params_encoder, 4262976);
  EXPECT_EQ(rows[0].params_total, 8529984);
  EXPECT_EQ(rows[0].multiplications, 4261888);
  EXPECT_EQ(rows[1].params_total, 68210752);
  EXPECT_EQ(rows[2].multiplications, 4261888);
  EXPECT_EQ(rows[2].params_encoder, 34103808);
  EXPECT_EQ(rows[2].params_total, 68239872);
  const std::string table = report_table(rows);
  EXPECT_NE(table.find("4,262,976 / 8,529,984"), std::string::npos);
  EXPECT_NE(table.find("34,103,808 / 68,239,872"), std::string::npos);
  EXPECT_NE(table.find("9473.28 param/s"), std::string::npos);
  const std::string csv = report_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,mean_nmse_db,mptr_params_per_s,mpur_per_s,multiplications,params_encoder,params_total");
  EXPECT_EQ(report_csv(rows), csv);
}

TEST(Report, EmptyAndInconsistent) {
  EXPECT_TRUE(comparison_report({}).empty());
  const LayerSpec a = LayerSpec::from_dims(64, 32, 64, 16);
  const LayerSpec b = LayerSpec::from_dims(64, 16, 64, 16);
  EXPECT_THROW(comparison_report({{"a", a, 1, 0, {}}, {"b", b, 1, 0, {}}}), Error);
}

TEST(Report, Formatting) {
  EXPECT_EQ(with_commas(0), "0");
  EXPECT_EQ(with_commas(999), "999");
  EXPECT_EQ(with_commas(1000), "1,000");
  EXPECT_EQ(with_commas(-1234567), "-1,234,567");
  EXPECT_EQ(format_db(-std::numeric_limits<double>::infinity()), "-400.0000");
}
