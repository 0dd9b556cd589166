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

#include "trajal/ae/train.hpp"
#include "trajal/al/session.hpp"
#include "trajal/core/generator.hpp"
#include "trajal/dtw/dtw.hpp"
#include "trajal/tsne/tsne.hpp"

namespace trajal::experiments
{

/// Settings of the three embedding routes.
struct EmbeddingParams
{
  dtw::PairwiseOptions dtw{};
  tsne::EmbeddingConfig tsne{};
  ae::ModelConfig ae{};
  ae::TrainConfig ae_train{};

  /// Small, CI-friendly settings: 500 t-SNE iterations, H = L = 16.
  static EmbeddingParams desk()
  {
    EmbeddingParams p;
    p.tsne.iterations = 500;
    p.ae.hidden = 16;
    p.ae.latent = 16;
    p.ae_train.epochs = 100;
    return p;
  }

  /// Full-width settings: 1000 t-SNE iterations, H = L = 64.
  static EmbeddingParams full()
  {
    EmbeddingParams p;
    p.tsne.iterations = 1000;
    p.ae.hidden = 64;
    p.ae.latent = 64;
    p.ae_train.epochs = 300;
    return p;
  }
};

/// Ids whose hidden label belongs to `classes`. Reads labels without going through the access log.
inline std::vector<TrajectoryId> filter_by_class(
  const TrajectoryStore & store, const std::vector<TrajectoryId> & ids, const std::vector<ClassLabel> & classes)
{
  std::unordered_map<TrajectoryId, ClassLabel> labels;
  for (const auto & t : store.all()) {
    if (t.label()) {
      labels.emplace(t.id(), *t.label());
    }
  }
  std::vector<TrajectoryId> out;
  for (auto id : ids) {
    const auto it = labels.find(id);
    if (it != labels.end() && std::find(classes.begin(), classes.end(), it->second) != classes.end()) {
      out.push_back(id);
    }
  }
  return out;
}

/// Trains an auto-encoder on the annotated and unlabeled splits, optionally restricted to `classes`.
inline ae::Model train_autoencoder(
  const Dataset & dataset, EmbeddingTag tag, const EmbeddingParams & params, std::uint64_t seed,
  const std::optional<std::vector<ClassLabel>> & classes = std::nullopt)
{
  require(tag != EmbeddingTag::MTSNE, "train_autoencoder: mTSNE is not an auto-encoder");
  auto model_cfg = params.ae;
  model_cfg.kind = tag == EmbeddingTag::RAE ? ae::AeKind::Rae : ae::AeKind::Vrae;
  std::vector<TrajectoryId> train_ids = dataset.partition.annotated;
  train_ids.insert(train_ids.end(), dataset.partition.unlabeled.begin(), dataset.partition.unlabeled.end());
  std::sort(train_ids.begin(), train_ids.end());
  if (classes) {
    train_ids = filter_by_class(dataset.store, train_ids, *classes);
  }
  ae::Model model(model_cfg);
  auto train_cfg = params.ae_train;
  train_cfg.seed = seed;
  ae::train(model, ae::load_pool(dataset.store, train_ids, ChannelSelection{model_cfg.use_velocity}), train_cfg);
  return model;
}

/**
 * @brief Embeds every trajectory of `dataset`.
 *
 * mTSNE is transductive and embeds all splits together from the DTW matrix. The auto-encoders
 * train on the annotated and unlabeled splits and then encode every split. With
 * `autoencoder_classes` set, only trajectories of those classes are used for training.
 */
inline Embedding build_embedding(
  const Dataset & dataset, EmbeddingTag tag, const EmbeddingParams & params, std::uint64_t seed,
  std::size_t workers = 1, const std::optional<std::vector<ClassLabel>> & autoencoder_classes = std::nullopt)
{
  std::vector<TrajectoryId> all;
  for (const auto & t : dataset.store.all()) {
    all.push_back(t.id());
  }
  if (tag == EmbeddingTag::MTSNE) {
    auto opts = params.dtw;
    opts.workers = workers;
    const auto d = dtw::pairwise_distances(dataset.store, all, opts);
    auto cfg = params.tsne;
    cfg.seed = seed;
    cfg.workers = workers;
    return tsne::to_embedding(tsne::embed(d, cfg).coords, all);
  }

  const auto model = train_autoencoder(dataset, tag, params, seed, autoencoder_classes);
  return ae::embed_pool(model, dataset.store, all, workers);
}

}  // namespace trajal::experiments
