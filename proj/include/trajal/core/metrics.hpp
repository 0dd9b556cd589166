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

#include "trajal/common/error.hpp"
#include "trajal/core/trajectory.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace trajal
{

enum class F1Averaging { Macro, Micro, PerClass };

inline std::string_view to_string(F1Averaging a) noexcept
{
  switch (a) {
    case F1Averaging::Macro:
      return "macro";
    case F1Averaging::Micro:
      return "micro";
    case F1Averaging::PerClass:
      return "per-class";
  }
  return "?";
}

struct F1Result
{
  double score = 0.0;             //!< micro under Micro, macro otherwise
  std::vector<double> per_class;  //!< indexed by class
};

/**
 * Per-class F1 = 2PR/(P+R) over the class universe [0, num_classes). A class that never
 * occurs in either sequence scores 0 and still counts toward the macro mean. Micro F1
 * pools the confusion counts, which for single-label data equals accuracy.
 */
inline F1Result f1_score(
  std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes,
  F1Averaging averaging = F1Averaging::Macro)
{
  if (predictions.empty() || truth.empty()) {
    fail(ErrorKind::InvalidArgument, "f1_score: empty input");
  }
  if (predictions.size() != truth.size()) {
    fail(ErrorKind::InvalidArgument, "f1_score: prediction and truth lengths differ");
  }
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto p = static_cast<std::size_t>(predictions[i]);
    auto t = static_cast<std::size_t>(truth[i]);
    if (predictions[i] < 0 || truth[i] < 0 || p >= num_classes || t >= num_classes) {
      fail(ErrorKind::InvalidArgument, "f1_score: label outside the class universe");
    }
    if (p == t) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }

  F1Result result;
  result.per_class.resize(num_classes);
  double macro = 0.0;
  std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    double denom = 2.0 * tp[c] + fp[c] + fn[c];
    result.per_class[c] = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    macro += result.per_class[c];
    tp_sum += tp[c];
    fp_sum += fp[c];
    fn_sum += fn[c];
  }
  if (averaging == F1Averaging::Micro) {
    result.score = 2.0 * tp_sum / (2.0 * tp_sum + fp_sum + fn_sum);
  } else {
    result.score = macro / static_cast<double>(num_classes);
  }
  return result;
}

inline F1Result f1_score(
  std::span<const ClassLabel> predictions, std::span<const ClassLabel> truth,
  F1Averaging averaging = F1Averaging::Macro)
{
  std::vector<int> p(predictions.size()), t(truth.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<int>(predictions[i]);
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(truth[i]);
  }
  return f1_score(p, t, kNumClasses, averaging);
}

}  // namespace trajal
