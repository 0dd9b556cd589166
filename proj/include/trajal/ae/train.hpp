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

#include "trajal/ae/model.hpp"
#include "trajal/common/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace trajal::ae
{

struct TrainConfig
{
  int epochs = 100;
  AdamConfig adam{};
  double kl_warmup_fraction = 0.2;  //!< KL weight ramps 0 -> 1 over this share of epochs
  double max_kl_weight = 1.0;
  std::size_t max_batch = 32;       //!< same-length groups larger than this are split
  double divergence_threshold = 1e6;
  std::uint64_t seed = 0;

  void validate() const
  {
    require(epochs >= 0, "train: epochs must be >= 0");
    require(adam.learning_rate > 0.0, "train: learning rate must be positive");
    require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0, "train: Adam betas in [0, 1)");
    require(adam.epsilon > 0.0, "train: Adam epsilon must be positive");
    require(max_kl_weight >= 0.0 && max_kl_weight <= 1.0, "train: KL weight must lie in [0, 1]");
    require(kl_warmup_fraction >= 0.0 && kl_warmup_fraction <= 1.0, "train: warm-up fraction must lie in [0, 1]");
    require(max_batch >= 1, "train: batch size must be >= 1");
  }

  /// Linear warm-up; reaches `max_kl_weight` at the end of the warm-up window.
  double kl_weight(int epoch) const noexcept
  {
    const double warm = kl_warmup_fraction * static_cast<double>(epochs);
    if (warm <= 0.0) {
      return max_kl_weight;
    }
    return max_kl_weight * std::min(1.0, static_cast<double>(epoch + 1) / warm);
  }
};

/// Trajectories of exactly one length.
struct LengthBatch
{
  Eigen::Index length = 0;
  std::vector<std::size_t> members;  //!< indices into the pool
};

/// Groups pool indices by series length (ascending), splitting groups above `max_batch`.
inline std::vector<LengthBatch> length_batches(const std::vector<Series> & pool, std::size_t max_batch)
{
  std::map<Eigen::Index, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    groups[pool[i].rows()].push_back(i);
  }
  std::vector<LengthBatch> out;
  for (auto & [len, idx] : groups) {
    for (std::size_t k = 0; k < idx.size(); k += max_batch) {
      LengthBatch b;
      b.length = len;
      b.members.assign(idx.begin() + static_cast<std::ptrdiff_t>(k),
                       idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), k + max_batch)));
      out.push_back(std::move(b));
    }
  }
  return out;
}

struct TrainResult
{
  std::vector<double> loss_trace;  //!< member-weighted mean loss per epoch
};

/**
 * @brief Trains `model` in place on `pool` (raw-unit series).
 *
 * Fits the channel normalizer on the pool, initializes parameters from the seed, then runs
 * epochs over length batches in a seeded shuffled order with one Adam step per batch. With
 * zero epochs the model keeps its current parameters and normalizer.
 */
inline TrainResult train(Model & model, const std::vector<Series> & pool, const TrainConfig & config)
{
  config.validate();
  require(!pool.empty(), "train: empty pool");
  for (const auto & s : pool) {
    model.check_arity(s);
  }
  TrainResult result;
  if (config.epochs == 0) {
    return result;
  }
  model.set_normalizer(ChannelNormalizer::fit(pool));
  model.initialize(mix_seed(config.seed, 3));

  auto batches = length_batches(pool, config.max_batch);
  std::vector<Sequence> inputs;
  inputs.reserve(batches.size());
  for (const auto & b : batches) {
    std::vector<const Series *> members;
    for (auto i : b.members) {
      members.push_back(&pool[i]);
    }
    inputs.push_back(make_batch(model, members));
  }

  Rng order_rng(mix_seed(config.seed, 2));
  Rng noise_rng(mix_seed(config.seed, 4));
  Adam adam(model.parameters(), config.adam);
  const bool variational = model.config().kind == AeKind::Vrae;
  std::vector<std::size_t> order(batches.size());
  std::iota(order.begin(), order.end(), 0);
  TensorMap grads;
  Mat eta;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    const double klw = variational ? config.kl_weight(epoch) : 0.0;
    double weighted = 0.0, count = 0.0;
    for (auto bi : order) {
      const auto B = static_cast<Eigen::Index>(batches[bi].members.size());
      if (variational) {
        eta.resize(model.config().latent, B);
        for (Eigen::Index k = 0; k < eta.size(); ++k) {
          eta.data()[k] = gaussian(noise_rng);
        }
      }
      const auto loss = batch_loss(model, inputs[bi], klw, variational ? &eta : nullptr, &grads);
      if (!std::isfinite(loss.total) || loss.total > config.divergence_threshold) {
        result.loss_trace.push_back(loss.total);
        fail(
          ErrorKind::Numerical, "train: loss diverged (" + std::to_string(loss.total) + ") at epoch " +
                                  std::to_string(epoch) + "; parameter norms: " + norm_report(model.parameters()));
      }
      adam.step(model.parameters(), grads);
      weighted += loss.total * static_cast<double>(B);
      count += static_cast<double>(B);
    }
    if (!all_finite(model.parameters())) {
      fail(ErrorKind::Numerical, "train: non-finite parameters after epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(weighted / count);
  }
  return result;
}

/// Reads every id through the store (so the access log sees exactly these reads).
inline std::vector<Series> load_pool(const TrajectoryStore & store, const std::vector<TrajectoryId> & ids, ChannelSelection ch)
{
  std::vector<Series> pool;
  pool.reserve(ids.size());
  for (auto id : ids) {
    pool.push_back(store.at(id).to_series(ch));
  }
  return pool;
}

/// One point per trajectory: the deterministic latent (posterior mean for the variational model).
inline Embedding embed_pool(
  const Model & model, const TrajectoryStore & store, const std::vector<TrajectoryId> & ids, std::size_t workers = 1)
{
  const ChannelSelection ch{model.config().use_velocity};
  const auto pool = load_pool(store, ids, ch);
  std::vector<EmbeddedPoint> points(ids.size());
  const auto tag = embedding_tag(model.config().kind);
  parallel_for(ids.size(), workers, [&](std::size_t i) { points[i] = {ids[i], tag, encode(model, pool[i]).mean}; });
  return Embedding(std::move(points));
}

inline void save_loss_trace(const std::string & path, const std::vector<double> & trace)
{
  std::ofstream out(path);
  if (!out) {
    fail(ErrorKind::Io, "cannot open for writing: " + path);
  }
  char buf[64];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", e, trace[e]);
    out << buf;
  }
}

}  // namespace trajal::ae
