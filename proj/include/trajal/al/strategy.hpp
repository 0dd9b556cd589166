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
#include "trajal/common/random.hpp"
#include "trajal/core/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

namespace trajal::al
{

enum class Strategy { Random, Margin, Entropy };

inline std::string_view to_string(Strategy s) noexcept
{
  switch (s) {
    case Strategy::Random:
      return "random";
    case Strategy::Margin:
      return "margin";
    case Strategy::Entropy:
      return "entropy";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) noexcept
{
  for (auto v : {Strategy::Random, Strategy::Margin, Strategy::Entropy}) {
    if (to_string(v) == s) {
      return v;
    }
  }
  return std::nullopt;
}

/// Uniform(0, 1) score per point, drawn in order from the session generator.
inline std::vector<double> informativeness_random(std::size_t count, Rng & rng)
{
  if (count == 0) {
    fail(ErrorKind::InvalidArgument, "informativeness_random: empty unlabeled set");
  }
  std::vector<double> scores(count);
  for (auto & s : scores) {
    s = uniform01(rng);
  }
  return scores;
}

/// Negative gap between the two most probable classes; in [-1, 0], larger is more informative.
inline double informativeness_margin(const classify::PredictiveDistribution & dist)
{
  dist.validate();
  double first = -1.0, second = -1.0;
  for (Eigen::Index k = 0; k < dist.probabilities.size(); ++k) {
    const double p = dist.probabilities[k];
    if (p > first) {
      second = first;
      first = p;
    } else if (p > second) {
      second = p;
    }
  }
  return -(first - second);
}

/// Shannon entropy in nats with 0 log 0 = 0.
inline double informativeness_entropy(const classify::PredictiveDistribution & dist)
{
  dist.validate();
  double h = 0.0;
  for (Eigen::Index k = 0; k < dist.probabilities.size(); ++k) {
    const double p = dist.probabilities[k];
    if (p > 0.0) {
      h -= p * std::log(p);
    }
  }
  return h;
}

/// Indices of the `k` highest scores; equal scores go to the lower trajectory id.
inline std::vector<std::size_t> select_top(
  const std::vector<double> & scores, const std::vector<TrajectoryId> & ids, std::size_t k)
{
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](auto a, auto b) {
    if (scores[a] != scores[b]) {
      return scores[a] > scores[b];
    }
    return ids[a] < ids[b];
  });
  order.resize(k);
  return order;
}

}  // namespace trajal::al
