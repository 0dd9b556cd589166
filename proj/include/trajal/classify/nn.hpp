// Copyright 2026 The trajal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "trajal/classify/distribution.hpp"
#include "trajal/common/error.hpp"
#include "trajal/common/random.hpp"
#include "trajal/common/tensors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

/**
 * @file nn.hpp
 *
 * Fully connected classifier. Every hidden layer is Linear -> BatchNorm -> ReLU; the output
 * layer is Linear followed by softmax. Trained by mini-batch Adam on mean cross-entropy.
 * Inputs are standardized with statistics of the training points.
 */

namespace trajal::classify
{

using Mat = Eigen::MatrixXd;

struct NnParams
{
  std::vector<int> hidden = {128, 256};
  int epochs = 150;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  double bn_momentum = 0.9;  //!< running = momentum * running + (1 - momentum) * batch
  double bn_epsilon = 1e-5;

  static NnParams vrae_widths()
  {
    NnParams p;
    p.hidden = {64, 128, 256, 128, 64};
    return p;
  }

  void validate() const
  {
    require(epochs >= 0, "nn: epochs must be >= 0");
    require(batch_size >= 1, "nn: batch size must be >= 1");
    require(adam.learning_rate > 0.0, "nn: learning rate must be positive");
    require(bn_momentum >= 0.0 && bn_momentum < 1.0, "nn: batch-norm momentum must lie in [0, 1)");
    for (int w : hidden) {
      require(w >= 1, "nn: hidden widths must be >= 1");
    }
  }
};

struct NnTrainLog
{
  std::vector<double> epoch_loss;  //!< mean cross-entropy over the batches actually used
  std::size_t skipped_batches = 0;  //!< single-sample batches (batch-norm variance undefined)
};

class NnModel
{
public:
  NnModel() = default;

  /// Builds the layer chain for `input -> hidden... -> classes` and draws a seeded init.
  NnModel(std::size_t input, std::vector<int> classes, NnParams params, std::uint64_t seed)
  : params_(std::move(params)), classes_(std::move(classes))
  {
    params_.validate();
    require(input >= 1 && classes_.size() >= 2, "nn: need input width >= 1 and >= 2 classes");
    widths_.push_back(static_cast<Eigen::Index>(input));
    for (int w : params_.hidden) {
      widths_.push_back(w);
    }
    widths_.push_back(static_cast<Eigen::Index>(classes_.size()));
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const auto in = widths_[l], out = widths_[l + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      Tensor w(out, in), b(out, 1);
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        w.data()[k] = uniform(rng, -bound, bound);
      }
      for (Eigen::Index k = 0; k < b.size(); ++k) {
        b.data()[k] = uniform(rng, -bound, bound);
      }
      params_map_[key(l, "W")] = std::move(w);
      params_map_[key(l, "b")] = std::move(b);
      if (l + 2 < widths_.size()) {
        params_map_[key(l, "gamma")] = Tensor::Ones(out, 1);
        params_map_[key(l, "beta")] = Tensor::Zero(out, 1);
        running_mean_.push_back(Eigen::VectorXd::Zero(out));
        running_var_.push_back(Eigen::VectorXd::Ones(out));
      }
    }
    scaler_.mean = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(input));
    scaler_.scale = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(input));
  }

  static std::string key(std::size_t layer, const char * part)
  {
    return "fc" + std::to_string(layer) + "." + part;
  }

  std::size_t layer_count() const noexcept { return widths_.size() - 1; }
  const std::vector<Eigen::Index> & widths() const noexcept { return widths_; }
  const std::vector<int> & classes() const noexcept { return classes_; }
  TensorMap & parameters() noexcept { return params_map_; }
  const TensorMap & parameters() const noexcept { return params_map_; }
  const std::vector<Eigen::VectorXd> & running_mean() const noexcept { return running_mean_; }
  const std::vector<Eigen::VectorXd> & running_var() const noexcept { return running_var_; }
  const FeatureScaler & scaler() const noexcept { return scaler_; }
  void set_scaler(FeatureScaler s) { scaler_ = std::move(s); }
  const NnParams & params() const noexcept { return params_; }

  /// Logits (classes x B) for standardized inputs (features x B).
  /// Train mode normalizes with batch statistics, inference mode with the running ones.
  Mat logits(const Mat & x, bool train_mode = false) const
  {
    Cache cache;
    return forward(x, train_mode, cache);
  }

  /**
   * Mean cross-entropy of a training-mode forward pass on `x` (features x B, standardized)
   * with target class indices `t`; fills `grads` with the full gradient when non-null.
   */
  double loss(const Mat & x, const std::vector<Eigen::Index> & t, TensorMap * grads, bool update_running = false)
  {
    Cache cache;
    const Mat z = forward(x, true, cache);
    if (update_running) {
      fold_running_statistics(cache, x.cols());
    }
    const auto B = z.cols();
    Mat p(z.rows(), B);
    double ce = 0.0;
    for (Eigen::Index b = 0; b < B; ++b) {
      p.col(b) = softmax(z.col(b));
      ce -= std::log(std::max(p(t[b], b), 1e-300));
    }
    ce /= static_cast<double>(B);
    if (grads == nullptr) {
      return ce;
    }
    *grads = zeros_like(params_map_);
    Mat d = p;
    for (Eigen::Index b = 0; b < B; ++b) {
      d(t[b], b) -= 1.0;
    }
    d /= static_cast<double>(B);
    for (std::size_t l = layer_count(); l-- > 0;) {
      const auto & c = cache.layers[l];
      if (l + 1 < layer_count()) {
        // ReLU, then batch norm.
        d = (c.out.array() > 0.0).select(d, 0.0);
        const auto & gamma = params_map_.at(key(l, "gamma"));
        grads->at(key(l, "gamma")).col(0) = (d.array() * c.xhat.array()).rowwise().sum().matrix();
        grads->at(key(l, "beta")).col(0) = d.rowwise().sum();
        const Eigen::ArrayXXd dxhat = d.array().colwise() * gamma.col(0).array();
        const double n = static_cast<double>(B);
        const Eigen::ArrayXd sum_dxhat = dxhat.rowwise().sum();
        const Eigen::ArrayXd sum_dxhat_xhat = (dxhat * c.xhat.array()).rowwise().sum();
        d = ((n * dxhat).colwise() - sum_dxhat - c.xhat.array().colwise() * sum_dxhat_xhat).matrix();
        d = (d.array().colwise() * (c.inv_std.array() / n)).matrix();
      }
      grads->at(key(l, "W")).noalias() = d * c.in.transpose();
      grads->at(key(l, "b")).col(0) = d.rowwise().sum();
      if (l > 0) {
        d = params_map_.at(key(l, "W")).transpose() * d;
      }
    }
    return ce;
  }

  /// Trains on raw points (rows) with labels from `classes()`.
  NnTrainLog fit(const Points & x, const std::vector<int> & labels, std::uint64_t seed)
  {
    require(x.rows() == static_cast<Eigen::Index>(labels.size()), "nn: point and label counts differ");
    require(x.cols() == widths_.front(), "nn: input width mismatch");
    if (!x.allFinite()) {
      fail(ErrorKind::Numerical, "nn: non-finite training point");
    }
    NnTrainLog log;
    if (params_.epochs == 0) {
      return log;
    }
    scaler_ = FeatureScaler::fit(x);
    const Mat xs = scaler_.apply(x).transpose();
    std::vector<Eigen::Index> targets(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto it = std::find(classes_.begin(), classes_.end(), labels[i]);
      require(it != classes_.end(), "nn: label outside the model's class list");
      targets[i] = it - classes_.begin();
    }
    Rng rng(seed);
    Adam adam(params_map_, params_.adam);
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    TensorMap grads;
    for (int epoch = 0; epoch < params_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      std::size_t used = 0;
      for (std::size_t start = 0; start < order.size(); start += params_.batch_size) {
        const std::size_t end = std::min(order.size(), start + params_.batch_size);
        if (end - start < 2 && layer_count() > 1) {
          ++log.skipped_batches;
          continue;
        }
        Mat xb(xs.rows(), static_cast<Eigen::Index>(end - start));
        std::vector<Eigen::Index> tb(end - start);
        for (std::size_t k = start; k < end; ++k) {
          xb.col(static_cast<Eigen::Index>(k - start)) = xs.col(static_cast<Eigen::Index>(order[k]));
          tb[k - start] = targets[order[k]];
        }
        total += loss(xb, tb, &grads, true) * static_cast<double>(end - start);
        used += end - start;
        adam.step(params_map_, grads);
      }
      if (!all_finite(params_map_)) {
        fail(ErrorKind::Numerical, "nn: non-finite parameters after epoch " + std::to_string(epoch));
      }
      log.epoch_loss.push_back(used > 0 ? total / static_cast<double>(used) : 0.0);
    }
    return log;
  }

  /// Inference-mode softmax output for one raw point.
  PredictiveDistribution predict_proba(const Eigen::Ref<const Eigen::RowVectorXd> & point) const
  {
    if (point.size() != widths_.front()) {
      fail(ErrorKind::InvalidArgument, "nn: point has dimension " + std::to_string(point.size()));
    }
    const Mat x = scaler_.apply(point).transpose();
    return {classes_, softmax(logits(x).col(0))};
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd> & point) const { return predict_proba(point).argmax(); }

private:
  struct LayerCache
  {
    Mat in, xhat, out;
    Eigen::VectorXd batch_mean, batch_var, inv_std;
  };
  struct Cache
  {
    std::vector<LayerCache> layers;
  };

  void fold_running_statistics(const Cache & cache, Eigen::Index batch)
  {
    const double m = params_.bn_momentum;
    const double n = static_cast<double>(batch);
    const double unbiased = n > 1.0 ? n / (n - 1.0) : 1.0;
    for (std::size_t l = 0; l < running_mean_.size(); ++l) {
      running_mean_[l] = m * running_mean_[l] + (1.0 - m) * cache.layers[l].batch_mean;
      running_var_[l] = m * running_var_[l] + (1.0 - m) * unbiased * cache.layers[l].batch_var;
    }
  }

  Mat forward(const Mat & x, bool train_mode, Cache & cache) const
  {
    cache.layers.assign(layer_count(), {});
    Mat a = x;
    for (std::size_t l = 0; l < layer_count(); ++l) {
      auto & c = cache.layers[l];
      c.in = a;
      Mat h = params_map_.at(key(l, "W")) * a;
      h.colwise() += params_map_.at(key(l, "b")).col(0);
      if (l + 1 == layer_count()) {
        return h;
      }
      Eigen::VectorXd mean, var;
      if (train_mode) {
        const double n = static_cast<double>(h.cols());
        mean = h.rowwise().mean();
        var = (h.colwise() - mean).array().square().rowwise().sum().matrix() / n;
        c.batch_mean = mean;
        c.batch_var = var;
      } else {
        mean = running_mean_[l];
        var = running_var_[l];
      }
      c.inv_std = (var.array() + params_.bn_epsilon).rsqrt().matrix();
      c.xhat = ((h.colwise() - mean).array().colwise() * c.inv_std.array()).matrix();
      Mat y = (c.xhat.array().colwise() * params_map_.at(key(l, "gamma")).col(0).array()).matrix();
      y.colwise() += params_map_.at(key(l, "beta")).col(0);
      c.out = y.cwiseMax(0.0);
      a = c.out;
    }
    return a;
  }

  NnParams params_;
  std::vector<int> classes_;
  std::vector<Eigen::Index> widths_;
  TensorMap params_map_;
  std::vector<Eigen::VectorXd> running_mean_, running_var_;
  FeatureScaler scaler_;
};

/// Convenience: build, seed and fit in one call (fresh initialization every time).
inline NnModel train_nn(const Points & x, const std::vector<int> & labels, const NnParams & params, std::uint64_t seed)
{
  NnModel m(static_cast<std::size_t>(x.cols()), class_list(labels), params, mix_seed(seed, 5));
  m.fit(x, labels, mix_seed(seed, 6));
  return m;
}

}  // namespace trajal::classify
