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

// Fully-connected CSI autoencoder with batch normalization:
//
//   encoder: FC(2 N_t N_c -> beta L) -> BN -> act -> FC(beta L -> L)
//   decoder: FC(L -> beta L) -> BN -> act -> FC(beta L -> 2 N_t N_c)
//
// Forward and backward passes are written out by hand; training minimizes the
// per-sample squared reconstruction error averaged over the batch.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "zonecsi/error.hpp"
#include "zonecsi/rng.hpp"

namespace zonecsi {

enum class Activation : std::uint32_t { Linear = 0, Saturating = 1 };

inline const char* to_string(Activation a) {
  return a == Activation::Linear ? "linear" : "saturating";
}

struct LayerSpec {
  std::int64_t input_dim = 4096;  // 2 N_t N_c
  std::int64_t codeword_len = 64;
  std::int64_t width_factor = 16;
  Activation activation = Activation::Saturating;

  static LayerSpec from_dims(std::int64_t n_t, std::int64_t n_c, std::int64_t codeword_len,
                             std::int64_t width_factor,
                             Activation activation = Activation::Saturating) {
    return {2 * n_t * n_c, codeword_len, width_factor, activation};
  }

  std::int64_t hidden() const { return width_factor * codeword_len; }

  void validate() const {
    require(codeword_len >= 1, ErrorKind::InvalidArgument, "codeword length must be >= 1");
    require(width_factor >= 1, ErrorKind::InvalidArgument, "width factor must be >= 1");
    require(input_dim >= codeword_len, ErrorKind::InvalidArgument,
            "input dimension must be >= codeword length");
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// ---------------------------------------------------------------------------
// Accounting

struct ParameterCount {
  std::int64_t encoder = 0;
  std::int64_t decoder = 0;
  std::int64_t total = 0;
};

struct MultiplicationCount {
  std::int64_t encoder = 0;
  std::int64_t decoder = 0;
};

/// Trainable parameters; batch-norm running statistics are not counted.
inline ParameterCount count_parameters(const LayerSpec& spec) {
  spec.validate();
  const std::int64_t d = spec.input_dim;
  const std::int64_t h = spec.hidden();
  const std::int64_t l = spec.codeword_len;
  ParameterCount c;
  c.encoder = (d + 1) * h + 2 * h + (h + 1) * l;
  c.decoder = (l + 1) * h + 2 * h + (h + 1) * d;
  c.total = c.encoder + c.decoder;
  return c;
}

/// Per-feedback multiplications: FC layers in*out, batch-norm 2*width,
/// activations free.
inline MultiplicationCount count_multiplications(const LayerSpec& spec) {
  spec.validate();
  const std::int64_t d = spec.input_dim;
  const std::int64_t h = spec.hidden();
  const std::int64_t l = spec.codeword_len;
  return {d * h + 2 * h + h * l, l * h + 2 * h + h * d};
}

// ---------------------------------------------------------------------------
// Parameters

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
struct Dense {
  Mat<T> weight;  // out x in
  Vec<T> bias;
};

template <class T>
struct BatchNorm {
  Vec<T> gamma;
  Vec<T> beta;
  Vec<T> running_mean;
  Vec<T> running_var;
};

template <class T>
struct ModelParams {
  LayerSpec spec;
  Dense<T> fc1;
  BatchNorm<T> bn1;
  Dense<T> fc2;
  Dense<T> fc3;
  BatchNorm<T> bn2;
  Dense<T> fc4;

  static ModelParams zeros(const LayerSpec& spec) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.input_dim);
    const auto h = static_cast<Eigen::Index>(spec.hidden());
    const auto l = static_cast<Eigen::Index>(spec.codeword_len);
    ModelParams m;
    m.spec = spec;
    m.fc1 = {Mat<T>::Zero(h, d), Vec<T>::Zero(h)};
    m.bn1 = {Vec<T>::Zero(h), Vec<T>::Zero(h), Vec<T>::Zero(h), Vec<T>::Zero(h)};
    m.fc2 = {Mat<T>::Zero(l, h), Vec<T>::Zero(l)};
    m.fc3 = {Mat<T>::Zero(h, l), Vec<T>::Zero(h)};
    m.bn2 = {Vec<T>::Zero(h), Vec<T>::Zero(h), Vec<T>::Zero(h), Vec<T>::Zero(h)};
    m.fc4 = {Mat<T>::Zero(d, h), Vec<T>::Zero(d)};
    return m;
  }

  /// Visits every tensor in declaration order (encoder, then decoder):
  /// f(name, data, size, trainable).
  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::int64_t trainable_count() const {
    std::int64_t n = 0;
    visit([&](std::string_view, const T*, Eigen::Index size, bool trainable) {
      if (trainable) n += size;
    });
    return n;
  }

  std::int64_t encoder_trainable_count() const {
    std::int64_t n = 0;
    visit([&](std::string_view name, const T*, Eigen::Index size, bool trainable) {
      if (trainable && name.substr(0, 3) != "fc3" && name.substr(0, 3) != "bn2" &&
          name.substr(0, 3) != "fc4")
        n += size;
    });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&](std::string_view, const T* data, Eigen::Index size, bool) {
      for (Eigen::Index i = 0; i < size; ++i) ok = ok && std::isfinite(data[i]);
    });
    return ok;
  }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out = ModelParams<U>::zeros(spec);
    std::vector<const T*> src;
    visit([&](std::string_view, const T* data, Eigen::Index, bool) { src.push_back(data); });
    std::size_t t = 0;
    out.visit([&](std::string_view, U* data, Eigen::Index size, bool) {
      for (Eigen::Index i = 0; i < size; ++i) data[i] = static_cast<U>(src[t][i]);
      ++t;
    });
    return out;
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& m, F& f) {
    auto dense = [&](const char* name, auto& layer) {
      f(std::string(name) + ".weight", layer.weight.data(), layer.weight.size(), true);
      f(std::string(name) + ".bias", layer.bias.data(), layer.bias.size(), true);
    };
    auto bn = [&](const char* name, auto& layer) {
      f(std::string(name) + ".gamma", layer.gamma.data(), layer.gamma.size(), true);
      f(std::string(name) + ".beta", layer.beta.data(), layer.beta.size(), true);
      f(std::string(name) + ".running_mean", layer.running_mean.data(), layer.running_mean.size(),
        false);
      f(std::string(name) + ".running_var", layer.running_var.data(), layer.running_var.size(),
        false);
    };
    dense("fc1", m.fc1);
    bn("bn1", m.bn1);
    dense("fc2", m.fc2);
    dense("fc3", m.fc3);
    bn("bn2", m.bn2);
    dense("fc4", m.fc4);
  }
};

/// Glorot-uniform weights, zero biases, identity batch-norm.
template <class T = double>
ModelParams<T> init_model(const LayerSpec& spec, std::uint64_t seed) {
  ModelParams<T> m = ModelParams<T>::zeros(spec);
  Rng rng = make_rng(seed, 0x1a17);
  auto glorot = [&](Mat<T>& w) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
  };
  glorot(m.fc1.weight);
  glorot(m.fc2.weight);
  glorot(m.fc3.weight);
  glorot(m.fc4.weight);
  for (auto* bn : {&m.bn1, &m.bn2}) {
    bn->gamma.setOnes();
    bn->running_var.setOnes();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

enum class Mode { Train, Infer };

struct BatchNormOptions {
  double epsilon = 1e-5;
  double momentum = 0.1;
};

namespace detail {

template <class T>
struct BatchNormCache {
  Mat<T> xhat;
  Vec<T> inv_std;
};

template <class T>
void apply_activation(Activation act, Mat<T>& y) {
  if (act == Activation::Saturating) y = y.array().tanh().matrix();
}

template <class T>
void activation_backward(Activation act, const Mat<T>& activated, Mat<T>& grad) {
  if (act == Activation::Saturating) grad.array() *= (T(1) - activated.array().square());
}

template <class T>
Mat<T> dense_forward(const Dense<T>& layer, const Mat<T>& x) {
  Mat<T> y(layer.weight.rows(), x.cols());
  y.noalias() = layer.weight * x;
  y.colwise() += layer.bias;
  return y;
}

// Returns gamma * xhat + beta; fills cache in train mode.
template <class T>
Mat<T> batchnorm_forward(const BatchNorm<T>& bn, const Mat<T>& z, Mode mode,
                         const BatchNormOptions& opts, BatchNormCache<T>* cache,
                         Vec<T>* batch_mean, Vec<T>* batch_var) {
  const T eps = static_cast<T>(opts.epsilon);
  Mat<T> xhat;
  if (mode == Mode::Train) {
    const auto n = static_cast<T>(z.cols());
    Vec<T> mean = z.rowwise().sum() / n;
    xhat = z.colwise() - mean;
    Vec<T> var = xhat.array().square().rowwise().sum() / n;
    Vec<T> inv_std = (var.array() + eps).rsqrt();
    xhat.array().colwise() *= inv_std.array();
    if (cache) cache->inv_std = inv_std;
    if (batch_mean) *batch_mean = mean;
    if (batch_var) *batch_var = var;
  } else {
    Vec<T> inv_std = (bn.running_var.array() + eps).rsqrt();
    xhat = z.colwise() - bn.running_mean;
    xhat.array().colwise() *= inv_std.array();
  }
  Mat<T> y = xhat;
  y.array().colwise() *= bn.gamma.array();
  y.colwise() += bn.beta;
  if (cache) cache->xhat = std::move(xhat);
  return y;
}

template <class T>
Mat<T> batchnorm_backward(const BatchNorm<T>& bn, const BatchNormCache<T>& cache,
                          const Mat<T>& dy, BatchNorm<T>& grad) {
  const auto n = static_cast<T>(dy.cols());
  grad.gamma = (dy.array() * cache.xhat.array()).rowwise().sum();
  grad.beta = dy.rowwise().sum();
  Mat<T> dxhat = dy;
  dxhat.array().colwise() *= bn.gamma.array();
  const Vec<T> sum_dxhat = dxhat.rowwise().sum();
  const Vec<T> sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().sum();
  Mat<T> dz = dxhat * n;
  dz.colwise() -= sum_dxhat;
  dz.array() -= cache.xhat.array().colwise() * sum_dxhat_xhat.array();
  dz.array().colwise() *= cache.inv_std.array() / n;
  return dz;
}

template <class T>
void update_running(BatchNorm<T>& bn, const Vec<T>& mean, const Vec<T>& var, Eigen::Index n,
                    const BatchNormOptions& opts) {
  const T m = static_cast<T>(opts.momentum);
  const T unbias = static_cast<T>(n) / static_cast<T>(n - 1);
  bn.running_mean = (T(1) - m) * bn.running_mean + m * mean;
  bn.running_var = (T(1) - m) * bn.running_var + (m * unbias) * var;
}

template <class T>
struct ForwardCache {
  Mat<T> input;
  Mat<T> a1;  // activated encoder hidden
  Mat<T> code;
  Mat<T> a3;  // activated decoder hidden
  Mat<T> output;
  BatchNormCache<T> bn1;
  BatchNormCache<T> bn2;
  Vec<T> mean1, var1, mean2, var2;
};

template <class T>
Mat<T> encode_block(const ModelParams<T>& m, const Mat<T>& x, Mode mode,
                    const BatchNormOptions& opts, std::type_identity_t<ForwardCache<T>>* cache) {
  Mat<T> z1 = dense_forward(m.fc1, x);
  Mat<T> a1 = batchnorm_forward(m.bn1, z1, mode, opts, cache ? &cache->bn1 : nullptr,
                                cache ? &cache->mean1 : nullptr, cache ? &cache->var1 : nullptr);
  apply_activation(m.spec.activation, a1);
  Mat<T> code = dense_forward(m.fc2, a1);
  if (cache) cache->a1 = std::move(a1);
  return code;
}

template <class T>
Mat<T> decode_block(const ModelParams<T>& m, const Mat<T>& code, Mode mode,
                    const BatchNormOptions& opts, std::type_identity_t<ForwardCache<T>>* cache) {
  Mat<T> z3 = dense_forward(m.fc3, code);
  Mat<T> a3 = batchnorm_forward(m.bn2, z3, mode, opts, cache ? &cache->bn2 : nullptr,
                                cache ? &cache->mean2 : nullptr, cache ? &cache->var2 : nullptr);
  apply_activation(m.spec.activation, a3);
  Mat<T> out = dense_forward(m.fc4, a3);
  if (cache) cache->a3 = std::move(a3);
  return out;
}

// Inference is evaluated in fixed-width column blocks (zero padded) so a
// sample's result does not depend on what else is in the batch.
inline constexpr Eigen::Index kInferBlock = 32;

template <class T, class Fn>
Mat<T> blocked(const Mat<T>& x, Eigen::Index out_rows, Fn&& fn) {
  Mat<T> out(out_rows, x.cols());
  Mat<T> block = Mat<T>::Zero(x.rows(), kInferBlock);
  for (Eigen::Index c0 = 0; c0 < x.cols(); c0 += kInferBlock) {
    const Eigen::Index w = std::min(kInferBlock, x.cols() - c0);
    block.setZero();
    block.leftCols(w) = x.middleCols(c0, w);
    const Mat<T> y = fn(block);
    out.middleCols(c0, w) = y.leftCols(w);
  }
  return out;
}

template <class T>
void check_input(const ModelParams<T>& m, const Mat<T>& x, Eigen::Index rows, Mode mode) {
  require(x.rows() == rows, ErrorKind::DimensionMismatch,
          "input has " + std::to_string(x.rows()) + " rows, model expects " + std::to_string(rows));
  require(mode == Mode::Infer || x.cols() >= 2, ErrorKind::InvalidArgument,
          "train-mode batch needs at least two samples");
  (void)m;
}

}  // namespace detail

/// Codewords (L x n) for the columns of x. Train mode uses batch statistics
/// and leaves running statistics untouched.
template <class T>
Mat<T> encode(const ModelParams<T>& model, const Mat<T>& x, Mode mode = Mode::Infer,
              const BatchNormOptions& opts = {}) {
  detail::check_input(model, x, model.spec.input_dim, mode);
  if (mode == Mode::Train) return detail::encode_block(model, x, mode, opts, nullptr);
  return detail::blocked<T>(x, model.spec.codeword_len, [&](const Mat<T>& b) {
    return detail::encode_block(model, b, Mode::Infer, opts, nullptr);
  });
}

template <class T>
Mat<T> decode(const ModelParams<T>& model, const Mat<T>& code, Mode mode = Mode::Infer,
              const BatchNormOptions& opts = {}) {
  detail::check_input(model, code, model.spec.codeword_len, mode);
  if (mode == Mode::Train) return detail::decode_block(model, code, mode, opts, nullptr);
  return detail::blocked<T>(code, model.spec.input_dim, [&](const Mat<T>& b) {
    return detail::decode_block(model, b, Mode::Infer, opts, nullptr);
  });
}

/// decode(encode(x)) in inference mode.
template <class T>
Mat<T> reconstruct(const ModelParams<T>& model, const Mat<T>& x,
                   const BatchNormOptions& opts = {}) {
  detail::check_input(model, x, model.spec.input_dim, Mode::Infer);
  return detail::blocked<T>(x, model.spec.input_dim, [&](const Mat<T>& b) {
    return detail::decode_block(model, detail::encode_block(model, b, Mode::Infer, opts, nullptr),
                                Mode::Infer, opts, nullptr);
  });
}

/// Mean over columns of the squared reconstruction error, train-mode forward,
/// no side effects.
template <class T>
T batch_loss(const ModelParams<T>& model, const Mat<T>& x, const BatchNormOptions& opts = {}) {
  detail::check_input(model, x, model.spec.input_dim, Mode::Train);
  const Mat<T> out = detail::decode_block(
      model, detail::encode_block(model, x, Mode::Train, opts, nullptr), Mode::Train, opts,
      nullptr);
  return (out - x).squaredNorm() / static_cast<T>(x.cols());
}

template <class T>
struct LossAndGradients {
  T mse = 0;
  ModelParams<T> gradients;
};

/// Train-mode forward and exact backward pass. Updates the running
/// batch-norm statistics of `model` as a side effect.
template <class T>
LossAndGradients<T> loss_and_gradients(ModelParams<T>& model, const Mat<T>& x,
                                       const BatchNormOptions& opts = {}) {
  detail::check_input(model, x, model.spec.input_dim, Mode::Train);
  const Activation act = model.spec.activation;
  detail::ForwardCache<T> cache;
  const Mat<T> code = detail::encode_block(model, x, Mode::Train, opts, &cache);
  const Mat<T> out = detail::decode_block(model, code, Mode::Train, opts, &cache);

  const auto n = static_cast<T>(x.cols());
  Mat<T> d_out = out - x;
  const T mse = d_out.squaredNorm() / n;
  require(std::isfinite(static_cast<double>(mse)), ErrorKind::NumericFailure,
          "non-finite loss in forward pass");
  d_out *= T(2) / n;

  LossAndGradients<T> res;
  res.mse = mse;
  ModelParams<T>& g = res.gradients;
  g.spec = model.spec;

  g.fc4.weight.noalias() = d_out * cache.a3.transpose();
  g.fc4.bias = d_out.rowwise().sum();
  Mat<T> d_a3(model.fc4.weight.cols(), x.cols());
  d_a3.noalias() = model.fc4.weight.transpose() * d_out;
  detail::activation_backward(act, cache.a3, d_a3);
  const Mat<T> d_z3 = detail::batchnorm_backward(model.bn2, cache.bn2, d_a3, g.bn2);

  g.fc3.weight.noalias() = d_z3 * code.transpose();
  g.fc3.bias = d_z3.rowwise().sum();
  Mat<T> d_code(model.fc3.weight.cols(), x.cols());
  d_code.noalias() = model.fc3.weight.transpose() * d_z3;

  g.fc2.weight.noalias() = d_code * cache.a1.transpose();
  g.fc2.bias = d_code.rowwise().sum();
  Mat<T> d_a1(model.fc2.weight.cols(), x.cols());
  d_a1.noalias() = model.fc2.weight.transpose() * d_code;
  detail::activation_backward(act, cache.a1, d_a1);
  const Mat<T> d_z1 = detail::batchnorm_backward(model.bn1, cache.bn1, d_a1, g.bn1);

  g.fc1.weight.noalias() = d_z1 * x.transpose();
  g.fc1.bias = d_z1.rowwise().sum();

  for (auto* bn : {&g.bn1, &g.bn2}) {
    bn->running_mean = Vec<T>::Zero(bn->gamma.size());
    bn->running_var = Vec<T>::Zero(bn->gamma.size());
  }
  detail::update_running(model.bn1, cache.mean1, cache.var1, x.cols(), opts);
  detail::update_running(model.bn2, cache.mean2, cache.var2, x.cols(), opts);
  return res;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::int64_t probes = 0;
  std::vector<std::string> groups;  // parameter groups touched
};

/// Central finite differences on `probes` trainable scalars spread over every
/// parameter group. Relative error is |a - n| / max(|a|, |n|, floor * max(1, loss));
/// the floor keeps structurally-zero gradients (FC bias ahead of batch-norm)
/// from dividing roundoff by zero, and scales with the loss because the
/// roundoff in a finite difference does.
inline GradientCheckResult gradient_check(const ModelParams<double>& model,
                                          const Mat<double>& batch, std::int64_t probes,
                                          std::uint64_t seed, double step = 1e-4,
                                          double floor = 1e-6,
                                          const BatchNormOptions& opts = {}) {
  ModelParams<double> work = model;
  const auto lg = loss_and_gradients(work, batch, opts);
  const auto& analytic = lg.gradients;
  const double eff_floor = floor * std::max(1.0, std::abs(lg.mse));

  struct Group {
    std::string name;
    double* param;
    const double* grad;
    Eigen::Index size;
  };
  std::vector<Group> groups;
  work = model;
  std::vector<const double*> grads;
  analytic.visit([&](std::string_view, const double* data, Eigen::Index, bool trainable) {
    if (trainable) grads.push_back(data);
  });
  std::size_t gi = 0;
  work.visit([&](std::string_view name, double* data, Eigen::Index size, bool trainable) {
    if (trainable) groups.push_back({std::string(name), data, grads[gi++], size});
  });

  Rng rng = make_rng(seed, 0x9c);
  GradientCheckResult res;
  for (std::int64_t p = 0; p < probes; ++p) {
    Group& g = groups[static_cast<std::size_t>(p) % groups.size()];
    const auto idx = std::uniform_int_distribution<Eigen::Index>(0, g.size - 1)(rng);
    const double saved = g.param[idx];
    g.param[idx] = saved + step;
    const double up = batch_loss(work, batch, opts);
    g.param[idx] = saved - step;
    const double down = batch_loss(work, batch, opts);
    g.param[idx] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = g.grad[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), eff_floor});
    res.max_relative_error = std::max(res.max_relative_error, std::abs(a - numeric) / denom);
    ++res.probes;
    if (std::find(res.groups.begin(), res.groups.end(), g.name) == res.groups.end())
      res.groups.push_back(g.name);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t batch_size = 64;
  std::int64_t epochs = 40;
  std::uint64_t seed = 1;
  BatchNormOptions batch_norm{};
  bool recalibrate_batchnorm = true;  // exact running stats after the last epoch

  void validate() const {
    require(learning_rate > 0 && beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 && epsilon > 0,
            ErrorKind::InvalidConfig, "optimizer hyperparameters out of range");
    require(batch_size >= 2, ErrorKind::InvalidConfig, "batch size must be >= 2");
    require(epochs >= 1, ErrorKind::InvalidConfig, "epochs must be >= 1");
    require(batch_norm.epsilon > 0 && batch_norm.momentum > 0 && batch_norm.momentum <= 1,
            ErrorKind::InvalidConfig, "batch-norm options out of range");
  }
};

struct TrainReport {
  std::vector<double> loss_curve;  // mean training loss per epoch
  double final_mse = 0.0;
  std::int64_t steps = 0;
};

template <class T>
class Adam {
 public:
  Adam(const ModelParams<T>& like, const TrainConfig& cfg) : cfg_(cfg) {
    m_ = ModelParams<T>::zeros(like.spec);
    v_ = ModelParams<T>::zeros(like.spec);
  }

  void step(ModelParams<T>& params, const ModelParams<T>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const T lr = static_cast<T>(cfg_.learning_rate * std::sqrt(c2) / c1);
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T eps = static_cast<T>(cfg_.epsilon * std::sqrt(c2));
    std::vector<T*> p_ptr, m_ptr, v_ptr;
    std::vector<const T*> g_ptr;
    std::vector<Eigen::Index> sizes;
    params.visit([&](std::string_view, T* d, Eigen::Index n, bool tr) {
      if (tr) {
        p_ptr.push_back(d);
        sizes.push_back(n);
      }
    });
    grads.visit([&](std::string_view, const T* d, Eigen::Index, bool tr) {
      if (tr) g_ptr.push_back(d);
    });
    m_.visit([&](std::string_view, T* d, Eigen::Index, bool tr) {
      if (tr) m_ptr.push_back(d);
    });
    v_.visit([&](std::string_view, T* d, Eigen::Index, bool tr) {
      if (tr) v_ptr.push_back(d);
    });
    for (std::size_t t = 0; t < p_ptr.size(); ++t) {
      Eigen::Map<Vec<T>> p(p_ptr[t], sizes[t]);
      Eigen::Map<const Vec<T>> g(g_ptr[t], sizes[t]);
      Eigen::Map<Vec<T>> m(m_ptr[t], sizes[t]);
      Eigen::Map<Vec<T>> v(v_ptr[t], sizes[t]);
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g.cwiseAbs2();
      p.array() -= lr * m.array() / (v.array().sqrt() + eps);
    }
  }

 private:
  TrainConfig cfg_;
  ModelParams<T> m_;
  ModelParams<T> v_;
  std::int64_t t_ = 0;
};

/// Sets every batch-norm's running statistics to the exact mean and unbiased
/// variance over `data`, layer by layer, with the current weights.
template <class T>
void recalibrate_batchnorm(ModelParams<T>& model, const Mat<T>& data,
                           const BatchNormOptions& opts = {}) {
  require(data.cols() >= 2, ErrorKind::InvalidArgument, "recalibration needs at least two samples");
  auto fit = [&](BatchNorm<T>& bn, const Mat<T>& z) {
    const auto n = static_cast<double>(z.cols());
    const Eigen::VectorXd mean = z.template cast<double>().rowwise().sum() / n;
    const Eigen::VectorXd var =
        (z.template cast<double>().colwise() - mean).array().square().rowwise().sum() / (n - 1.0);
    bn.running_mean = mean.cast<T>();
    bn.running_var = var.cast<T>();
  };
  const Mat<T> z1 = detail::dense_forward(model.fc1, data);
  fit(model.bn1, z1);
  Mat<T> a1 = detail::batchnorm_forward<T>(model.bn1, z1, Mode::Infer, opts, nullptr, nullptr, nullptr);
  detail::apply_activation(model.spec.activation, a1);
  const Mat<T> z3 = detail::dense_forward(model.fc3, detail::dense_forward(model.fc2, a1));
  fit(model.bn2, z3);
}

/// Mini-batch Adam over the columns of `data` (already normalized). The
/// permutation is reshuffled each epoch from the configured seed; a trailing
/// batch of one sample is skipped.
template <class T>
TrainReport train(ModelParams<T>& model, const Mat<T>& data, const TrainConfig& cfg) {
  cfg.validate();
  require(data.cols() >= 2, ErrorKind::InvalidArgument, "training set needs at least two samples");
  require(data.rows() == model.spec.input_dim, ErrorKind::DimensionMismatch,
          "training data dimension does not match the model");
  Adam<T> opt(model, cfg);
  Rng rng = make_rng(cfg.seed, 0x7a1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  TrainReport report;
  Mat<T> batch;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    Eigen::Index seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (end - start < 2) continue;
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + end);
      batch = data(Eigen::all, idx);
      LossAndGradients<T> lg = loss_and_gradients(model, batch, cfg.batch_norm);
      opt.step(model, lg.gradients);
      loss_sum += static_cast<double>(lg.mse) * static_cast<double>(idx.size());
      seen += static_cast<Eigen::Index>(idx.size());
      ++report.steps;
    }
    const double epoch_loss = loss_sum / static_cast<double>(seen);
    require(std::isfinite(epoch_loss), ErrorKind::NumericFailure,
            "training diverged at epoch " + std::to_string(epoch));
    report.loss_curve.push_back(epoch_loss);
  }
  if (cfg.recalibrate_batchnorm) recalibrate_batchnorm(model, data, cfg.batch_norm);
  report.final_mse = report.loss_curve.back();
  return report;
}

}  // namespace zonecsi
