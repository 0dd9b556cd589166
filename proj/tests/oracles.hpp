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

// Test-only reference computations. Nothing here calls into the code under test
// except through the function objects the tests pass in.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

namespace trajal::oracle
{

/// Minimum path cost over every monotone, continuous, boundary-anchored warping path,
/// found by explicit depth-first enumeration (exponential; keep lengths small).
template <typename SeriesT>
double brute_force_dtw(const SeriesT & a, const SeriesT & b)
{
  const auto n = a.rows();
  const auto m = b.rows();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(Eigen::Index, Eigen::Index, double)> walk = [&](Eigen::Index i, Eigen::Index j, double acc) {
    acc += (a.row(i) - b.row(j)).norm();
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n) {
      walk(i + 1, j, acc);
    }
    if (j + 1 < m) {
      walk(i, j + 1, acc);
    }
    if (i + 1 < n && j + 1 < m) {
      walk(i + 1, j + 1, acc);
    }
  };
  walk(0, 0, 0.0);
  return best;
}

/// Central finite differences of a scalar function over a flat parameter vector.
inline Eigen::VectorXd finite_difference_gradient(
  const std::function<double(const Eigen::VectorXd &)> & f, const Eigen::VectorXd & x, double h = 1e-6)
{
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + h;
    const double up = f(probe);
    probe[k] = orig - h;
    const double down = f(probe);
    probe[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Componentwise relative error with a floor of 1e-3 * max|reference| so that
/// near-zero components do not dominate.
inline double max_relative_error(const Eigen::VectorXd & analytic, const Eigen::VectorXd & reference)
{
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < reference.size(); ++k) {
    const double denom = std::max(std::abs(reference[k]), 1e-3 * scale);
    worst = std::max(worst, std::abs(analytic[k] - reference[k]) / denom);
  }
  return worst;
}

/// Leave-one-out 1-nearest-neighbour accuracy under an arbitrary distance.
template <typename Label>
double loo_1nn_accuracy(
  std::size_t n, const std::function<double(std::size_t, std::size_t)> & dist, const std::vector<Label> & labels)
{
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && dist(i, j) < best) {
        best = dist(i, j);
        arg = j;
      }
    }
    correct += labels[arg] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

/**
 * Largest violation of the soft-margin KKT conditions for a binary dual solution, with margin
 * m_i = y_i (sum_j alpha_j y_j K(x_j, x_i) - rho):
 *   alpha = 0      ->  m >= 1,   alpha = C  ->  m <= 1,   0 < alpha < C  ->  m = 1.
 * Also folds in the box constraint and |sum alpha_i y_i|.
 */
inline double kkt_residual(
  const std::function<double(std::size_t, std::size_t)> & kernel, const std::vector<double> & alpha,
  const std::vector<int> & y, double rho, double c)
{
  const std::size_t n = alpha.size();
  double worst = 0.0, balance = 0.0;
  const double at_bound = 1e-12 * c;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max({worst, -alpha[i], alpha[i] - c});
    balance += alpha[i] * y[i];
    double f = -rho;
    for (std::size_t j = 0; j < n; ++j) {
      f += alpha[j] * y[j] * kernel(j, i);
    }
    const double m = y[i] * f;
    if (alpha[i] <= at_bound) {
      worst = std::max(worst, 1.0 - m);
    } else if (alpha[i] >= c - at_bound) {
      worst = std::max(worst, m - 1.0);
    } else {
      worst = std::max(worst, std::abs(m - 1.0));
    }
  }
  return std::max(worst, std::abs(balance));
}

}  // namespace trajal::oracle
