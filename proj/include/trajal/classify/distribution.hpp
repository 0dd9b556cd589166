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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace trajal::classify
{

/// Row-per-point feature matrix.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Probabilities over the classes a model was trained on (class ids ascending).
struct PredictiveDistribution
{
  std::vector<int> classes;
  Eigen::VectorXd probabilities;

  void validate() const
  {
    if (classes.size() < 2 || static_cast<Eigen::Index>(classes.size()) != probabilities.size()) {
      fail(ErrorKind::InvalidArgument, "predictive distribution: need >= 2 classes with one probability each");
    }
    if (!probabilities.allFinite() || probabilities.minCoeff() < 0.0 || probabilities.maxCoeff() > 1.0 ||
        std::abs(probabilities.sum() - 1.0) > 1e-8) {
      fail(ErrorKind::InvalidArgument, "predictive distribution: not a probability vector");
    }
  }

  /// Class with the highest probability; ties go to the smaller class id.
  int argmax() const
  {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < probabilities.size(); ++k) {
      if (probabilities[k] > probabilities[best]) {
        best = k;
      }
    }
    return classes[static_cast<std::size_t>(best)];
  }
};

/// Numerically stable softmax (temperature 1).
inline Eigen::VectorXd softmax(const Eigen::VectorXd & logits)
{
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

/// Sorted distinct labels; at least two are required for any classifier here.
inline std::vector<int> class_list(const std::vector<int> & labels)
{
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) {
    fail(ErrorKind::InvalidArgument, "classifier: training data must contain at least two classes");
  }
  return classes;
}

/// Per-feature mean and scale of the training points, applied before fitting and predicting.
struct FeatureScaler
{
  Eigen::RowVectorXd mean, scale;

  static FeatureScaler fit(const Points & x)
  {
    FeatureScaler s;
    s.mean = x.colwise().mean();
    s.scale = ((x.rowwise() - s.mean).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index k = 0; k < s.scale.size(); ++k) {
      if (!(s.scale[k] > 1e-12)) {
        s.scale[k] = 1.0;
      }
    }
    return s;
  }

  Points apply(const Points & x) const
  {
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }

  Eigen::RowVectorXd apply(const Eigen::Ref<const Eigen::RowVectorXd> & x) const
  {
    return ((x - mean).array() / scale.array()).matrix();
  }
};

}  // namespace trajal::classify
