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

#include "zonecsi/autoenc.hpp"
#include "zonecsi/rng.hpp"
#include "zonecsi/scene.hpp"
#include "zonecsi/transform.hpp"

using namespace zonecsi;

namespace {

LayerSpec small_spec(Activation act = Activation::Saturating) { return {24, 4, 2, act}; }

Mat<double> random_batch(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double amp = 1.0) {
  Rng rng = make_rng(seed, 3);
  Mat<double> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -amp, amp);
  return x;
}

// Randomizes every tensor, including running statistics (variance kept positive).
ModelParams<double> random_model(const LayerSpec& spec, std::uint64_t seed) {
  auto m = init_model<double>(spec, seed);
  Rng rng = make_rng(seed, 4);
  m.visit([&](std::string_view name, double* d, Eigen::Index n, bool) {
    const bool var = name.find("running_var") != std::string_view::npos;
    for (Eigen::Index i = 0; i < n; ++i) d[i] = var ? uniform(rng, 0.5, 2.0) : uniform(rng, -0.5, 0.5);
  });
  return m;
}

Vec<double> bn_infer(const BatchNorm<double>& bn, const Vec<double>& z, double eps) {
  return (bn.gamma.array() * (z - bn.running_mean).array() / (bn.running_var.array() + eps).sqrt() +
          bn.beta.array())
      .matrix();
}

}  // namespace

// ---------------------------------------------------------------------------
// Accounting

TEST(Counting, TableTwoParameterCounts) {
  const auto p16 = count_parameters(LayerSpec::from_dims(64, 32, 64, 16));
  EXPECT_EQ(p16.encoder, 4262976);
  EXPECT_EQ(p16.total, 8529984);
  const auto p128 = count_parameters(LayerSpec::from_dims(64, 32, 64, 128));
  EXPECT_EQ(p128.encoder, 34103360);
  EXPECT_EQ(p128.total, 68210752);
  EXPECT_EQ(8 * p16.encoder, 34103808);
  EXPECT_EQ(8 * p16.total, 68239872);
}

TEST(Counting, TableTwoMultiplications) {
  EXPECT_EQ(count_multiplications(LayerSpec::from_dims(64, 32, 64, 16)).encoder, 4261888);
  EXPECT_EQ(count_multiplications(LayerSpec::from_dims(64, 32, 64, 128)).encoder, 34095104);
  EXPECT_EQ(std::int64_t{4096} * 1024 + 2 * 1024 + 1024 * 64, 4261888);
}

TEST(Counting, MatchesAllocatedTrainableScalars) {
  for (std::int64_t d : {8, 24, 100})
    for (std::int64_t l : {1, 3, 8})
      for (std::int64_t b : {1, 2, 5}) {
        if (l > d) continue;
        const LayerSpec s{d, l, b, Activation::Linear};
        const auto m = ModelParams<double>::zeros(s);
        EXPECT_EQ(count_parameters(s).total, m.trainable_count());
        EXPECT_EQ(count_parameters(s).encoder, m.encoder_trainable_count());
      }
}

TEST(Counting, InvalidSpecRejected) {
  EXPECT_THROW(count_parameters(LayerSpec{4, 8, 1, Activation::Linear}), Error);
  EXPECT_THROW(count_parameters(LayerSpec{8, 4, 0, Activation::Linear}), Error);
}

// ---------------------------------------------------------------------------
// Initialization

TEST(Init, DeterministicZeroBiasesAndGlorotBound) {
  const LayerSpec s = small_spec();
  const auto a = init_model<double>(s, 5), b = init_model<double>(s, 5);
  std::vector<double> va, vb;
  a.visit([&](std::string_view, const double* d, Eigen::Index n, bool) { va.insert(va.end(), d, d + n); });
  b.visit([&](std::string_view, const double* d, Eigen::Index n, bool) { vb.insert(vb.end(), d, d + n); });
  EXPECT_EQ(va, vb);
  for (const auto* fc : {&a.fc1, &a.fc2, &a.fc3, &a.fc4}) {
    EXPECT_EQ(fc->bias.cwiseAbs().maxCoeff(), 0.0);
    const double bound = std::sqrt(6.0 / double(fc->weight.rows() + fc->weight.cols()));
    EXPECT_LE(fc->weight.cwiseAbs().maxCoeff(), bound);
  }
  for (const auto* bn : {&a.bn1, &a.bn2}) {
    EXPECT_TRUE((bn->gamma.array() == 1).all());
    EXPECT_TRUE((bn->beta.array() == 0).all());
    EXPECT_TRUE((bn->running_mean.array() == 0).all());
    EXPECT_TRUE((bn->running_var.array() == 1).all());
  }
}

// ---------------------------------------------------------------------------
// Forward pass

TEST(Forward, ZeroModelGivesZero) {
  const auto m = ModelParams<double>::zeros(small_spec());
  // zero running variance is fine with eps > 0
  const auto x = random_batch(24, 5, 1);
  EXPECT_EQ(encode(m, x).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(decode(m, Mat<double>(encode(m, x))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, LinearInferMatchesDirectAlgebra) {
  const LayerSpec s = small_spec(Activation::Linear);
  auto m = init_model<double>(s, 2);
  Rng rng = make_rng(9, 9);
  for (auto* b : {&m.fc1.bias, &m.fc2.bias, &m.fc3.bias, &m.fc4.bias})
    for (Eigen::Index i = 0; i < b->size(); ++i) (*b)(i) = uniform(rng, -1, 1);
  const auto x = random_batch(24, 3, 2);
  // identity batch-norm in infer mode still divides by sqrt(1 + eps)
  const double k = 1.0 / std::sqrt(1.0 + BatchNormOptions{}.epsilon);
  const Mat<double> direct = m.fc2.weight * (k * ((m.fc1.weight * x).colwise() + m.fc1.bias));
  const Mat<double> expect = direct.colwise() + m.fc2.bias;
  const Mat<double> code = encode(m, x);
  EXPECT_LT((code - expect).cwiseAbs().maxCoeff(), 1e-12);
  const Mat<double> dec_direct =
      (m.fc4.weight * (k * ((m.fc3.weight * code).colwise() + m.fc3.bias))).colwise() + m.fc4.bias;
  EXPECT_LT((decode(m, code) - dec_direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, SaturatingInferMatchesPerSampleOracle) {
  const LayerSpec s = small_spec();
  const auto m = random_model(s, 3);
  const auto x = random_batch(24, 4, 3);
  const double eps = BatchNormOptions{}.epsilon;
  const Mat<double> out = reconstruct(m, x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Vec<double> h = bn_infer(m.bn1, m.fc1.weight * x.col(j) + m.fc1.bias, eps).array().tanh();
    Vec<double> c = m.fc2.weight * h + m.fc2.bias;
    Vec<double> g = bn_infer(m.bn2, m.fc3.weight * c + m.fc3.bias, eps).array().tanh();
    Vec<double> y = m.fc4.weight * g + m.fc4.bias;
    EXPECT_LT((out.col(j) - y).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, TrainModeBatchNormStandardizes) {
  const auto z = random_batch(16, 40, 4, 300.0);
  BatchNorm<double> bn{Vec<double>::Ones(16), Vec<double>::Zero(16), Vec<double>::Zero(16),
                       Vec<double>::Ones(16)};
  const Mat<double> y = detail::batchnorm_forward<double>(bn, z, Mode::Train, BatchNormOptions{}, nullptr,
                                                  nullptr, nullptr);
  const Vec<double> mean = y.rowwise().mean();
  const Vec<double> var = (y.colwise() - mean).array().square().rowwise().mean();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-6);
}

TEST(Forward, RandomInputsStayFinite) {
  const auto m = init_model<double>(small_spec(), 1);
  const auto x = random_batch(24, 50, 5, 100.0);
  EXPECT_TRUE(reconstruct(m, x).allFinite());
}

TEST(Forward, InferenceIsBatchIndependent) {
  const auto m = random_model(small_spec(), 6);
  const auto x = random_batch(24, 70, 6);
  const Mat<double> all = reconstruct(m, x);
  const Mat<double> all_codes = encode(m, x);
  for (Eigen::Index j : {0, 31, 32, 69}) {
    const Mat<double> one = x.col(j);
    EXPECT_TRUE((reconstruct(m, one).col(0).array() == all.col(j).array()).all());
    EXPECT_TRUE((encode(m, one).col(0).array() == all_codes.col(j).array()).all());
  }
  const Mat<double> tail = x.rightCols(5);
  EXPECT_TRUE((reconstruct(m, tail).array() == all.rightCols(5).array()).all());
}

TEST(Forward, LinearReconstructionIsAffine) {
  const auto m = random_model(small_spec(Activation::Linear), 7);
  const auto x = random_batch(24, 1, 7), y = random_batch(24, 1, 8);
  for (double a : {0.0, 0.3, 1.7, -2.0}) {
    const Mat<double> mix = a * x + (1 - a) * y;
    const Mat<double> lhs = reconstruct(m, mix);
    const Mat<double> rhs = a * reconstruct(m, x) + (1 - a) * reconstruct(m, y);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Forward, ShapeAndBatchErrors) {
  auto m = init_model<double>(small_spec(), 1);
  EXPECT_THROW(encode(m, random_batch(23, 2, 1)), Error);
  EXPECT_THROW(decode(m, random_batch(5, 2, 1)), Error);
  try {
    encode(m, random_batch(24, 1, 1), Mode::Train);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
  }
  EXPECT_THROW(loss_and_gradients(m, random_batch(24, 1, 1)), Error);
}

// ---------------------------------------------------------------------------
// Loss and gradients

TEST(Gradients, MatchCentralDifferencesSaturating) {
  const auto m = random_model(small_spec(), 11);
  const auto r = gradient_check(m, random_batch(24, 4, 11), 300, 1);
  EXPECT_LT(r.max_relative_error, 1e-5);
  EXPECT_EQ(r.groups.size(), 12u);
}

TEST(Gradients, MatchCentralDifferencesLinear) {
  const auto m = random_model(small_spec(Activation::Linear), 12);
  // batch-norm over 6 samples is strongly curved; a smaller step keeps the
  // O(step^2) truncation term below the tolerance
  const auto r = gradient_check(m, random_batch(24, 6, 12), 300, 2, 3e-5);
  EXPECT_LT(r.max_relative_error, 1e-5);
}

TEST(Gradients, LossIsBatchMeanSquaredError) {
  auto m = random_model(small_spec(), 13);
  const auto x = random_batch(24, 5, 13);
  const double direct = batch_loss(m, x);
  const auto lg = loss_and_gradients(m, x);
  EXPECT_NEAR(lg.mse, direct, 1e-14 * std::max(1.0, direct));
}

TEST(Gradients, RunningStatisticsFollowMomentum) {
  auto m = init_model<double>(small_spec(), 14);
  const auto x = random_batch(24, 8, 14);
  const Mat<double> z1 = (m.fc1.weight * x).colwise() + m.fc1.bias;
  const Vec<double> mean = z1.rowwise().mean();
  const Vec<double> var_unbiased =
      (z1.colwise() - mean).array().square().rowwise().sum() / double(x.cols() - 1);
  BatchNormOptions o;
  o.momentum = 0.25;
  loss_and_gradients(m, x, o);
  EXPECT_LT((m.bn1.running_mean - 0.25 * mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m.bn1.running_var - (0.75 * Vec<double>::Ones(z1.rows()) + 0.25 * var_unbiased))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Gradients, InferModeErrorScalesQuadratically) {
  // zero biases, zero shifts and zero running means make the linear map homogeneous
  auto m = random_model(small_spec(Activation::Linear), 15);
  for (auto* b : {&m.fc1.bias, &m.fc2.bias, &m.fc3.bias, &m.fc4.bias}) b->setZero();
  for (auto* bn : {&m.bn1, &m.bn2}) {
    bn->beta.setZero();
    bn->running_mean.setZero();
  }
  const auto x = random_batch(24, 6, 15);
  const Mat<double> x2 = 2.0 * x;
  const double e1 = (reconstruct(m, x) - x).squaredNorm();
  const double e2 = (reconstruct(m, x2) - x2).squaredNorm();
  EXPECT_NEAR(e2 / e1, 4.0, 1e-10);
}

TEST(Gradients, NonFiniteInputIsNumericFailure) {
  auto m = init_model<double>(small_spec(), 16);
  auto x = random_batch(24, 3, 16);
  x(2, 1) = std::numeric_limits<double>::infinity();
  try {
    loss_and_gradients(m, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
  }
}

// ---------------------------------------------------------------------------
// Optimizer and training

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  const LayerSpec s = small_spec();
  auto p = init_model<double>(s, 1);
  const auto before = p;
  auto g = ModelParams<double>::zeros(s);
  g.fc2.weight.setConstant(0.3);
  g.fc2.weight(0, 0) = -5.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  Adam<double> opt(p, cfg);
  opt.step(p, g);
  // bias-corrected first step: lr * g / (|g| + eps)
  EXPECT_NEAR(p.fc2.weight(0, 0) - before.fc2.weight(0, 0), 0.01, 1e-8);
  EXPECT_NEAR(p.fc2.weight(1, 1) - before.fc2.weight(1, 1), -0.01, 1e-8);
  EXPECT_EQ(p.fc1.weight, before.fc1.weight);
}

TEST(Train, SameSeedSameParameters) {
  const LayerSpec s = small_spec();
  const auto x = random_batch(24, 40, 17);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 5;
  auto a = init_model<double>(s, 3), b = init_model<double>(s, 3);
  const auto ra = train(a, x, cfg), rb = train(b, x, cfg);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
  EXPECT_EQ(a.fc4.weight, b.fc4.weight);
  EXPECT_EQ(a.bn2.running_var, b.bn2.running_var);
}

TEST(Train, OverfitsOneRepeatedSample) {
  const LayerSpec s = small_spec();
  Mat<double> x = random_batch(24, 1, 18, 0.5).replicate(1, 8);
  auto m = init_model<double>(s, 4);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 3000;
  cfg.learning_rate = 3e-3;
  const auto r = train(m, x, cfg);
  EXPECT_LT(r.final_mse, 1e-6);
  const auto lg = loss_and_gradients(m, x);
  double gmax = 0;
  lg.gradients.visit([&](std::string_view, const double* d, Eigen::Index n, bool tr) {
    if (tr)
      for (Eigen::Index i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(d[i]));
  });
  EXPECT_LT(gmax, 1e-2);
}

TEST(Train, RecalibrationSetsPopulationStatistics) {
  const LayerSpec s = small_spec();
  auto m = random_model(s, 31);
  const auto x = random_batch(24, 50, 31);
  recalibrate_batchnorm(m, x);
  const Mat<double> z1 = (m.fc1.weight * x).colwise() + m.fc1.bias;
  const Vec<double> mean = z1.rowwise().mean();
  const Vec<double> var = (z1.colwise() - mean).array().square().rowwise().sum() / 49.0;
  EXPECT_LT((m.bn1.running_mean - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m.bn1.running_var - var).cwiseAbs().maxCoeff(), 1e-12);
  // after recalibration, infer-mode batch-norm standardizes the training set
  const Mat<double> a1 = detail::batchnorm_forward<double>(
      m.bn1, z1, Mode::Infer, BatchNormOptions{0.0, 0.1}, nullptr, nullptr, nullptr);
  const Vec<double> g = m.bn1.gamma, b = m.bn1.beta;
  const Mat<double> xhat = (a1.colwise() - b).array().colwise() / g.array();
  EXPECT_LT(xhat.rowwise().mean().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Train, RankOneZoneReachesMinus30dB) {
  // rank-1 data admits exact reconstruction by a linear autoencoder
  Eigen::VectorXd lam(1);
  lam << 1.0;
  const auto sub = random_zone_subspace(32, lam, 21);
  const auto h = generate_kl_channels(sub, 512, 22);
  Eigen::MatrixXd x(64, 512);
  for (int i = 0; i < 512; ++i) x.col(i) = complex_to_real(h[i]);
  const auto norm = fit_rms_normalizer(x);
  const Mat<double> xn = x / norm.scale;
  auto m = init_model<double>({64, 8, 2, Activation::Linear}, 5);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.epochs = 200;
  train(m, xn, cfg);
  const Mat<double> r = reconstruct(m, xn);
  double num = 0, den = 0;
  for (int i = 0; i < 512; ++i) {
    num += (r.col(i) - xn.col(i)).squaredNorm() / xn.col(i).squaredNorm();
    den += 1;
  }
  EXPECT_LE(10 * std::log10(num / den), -30.0);
}

TEST(Train, SmoothedLossMostlyDecreases) {
  SceneConfig c;
  c.grid_nx = 20;
  c.grid_ny = 20;
  const Scene scene = generate_scene(c);
  const AngularDelayTransform tf(64, c.num_subcarriers, 8);
  Eigen::MatrixXd x(tf.dim(), 400);
  for (int i = 0; i < 400; ++i) x.col(i) = tf(synthesize_channel(scene, scene.ue_grid[i]).channel).values;
  const Mat<double> xn = x / fit_rms_normalizer(x).scale;
  auto m = init_model<double>({tf.dim(), 16, 2, Activation::Saturating}, 6);
  TrainConfig cfg;
  cfg.batch_size = 50;
  cfg.epochs = 60;
  const auto r = train(m, xn, cfg);
  std::vector<double> smooth;
  for (std::size_t i = 2; i < r.loss_curve.size(); ++i)
    smooth.push_back((r.loss_curve[i] + r.loss_curve[i - 1] + r.loss_curve[i - 2]) / 3);
  int violations = 0;
  for (std::size_t i = 1; i < smooth.size(); ++i) violations += smooth[i] > smooth[i - 1];
  EXPECT_LE(violations, static_cast<int>(0.05 * smooth.size()) + 1);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
}

TEST(Train, ConfigValidation) {
  auto m = init_model<double>(small_spec(), 1);
  TrainConfig cfg;
  cfg.batch_size = 1;
  EXPECT_THROW(train(m, random_batch(24, 10, 1), cfg), Error);
  cfg = {};
  cfg.learning_rate = 0;
  EXPECT_THROW(train(m, random_batch(24, 10, 1), cfg), Error);
}

TEST(Cast, FloatRoundTripPreservesFloatValues) {
  const auto f = init_model<float>(small_spec(), 8);
  const auto back = f.cast<double>().cast<float>();
  EXPECT_EQ(f.fc1.weight, back.fc1.weight);
  EXPECT_EQ(f.bn2.running_var, back.bn2.running_var);
}
