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
#include "trajal/common/parallel.hpp"
#include "trajal/common/random.hpp"
#include "trajal/core/embedding.hpp"
#include "trajal/dtw/dtw.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file tsne.hpp
 *
 * Stochastic neighbor embedding of a precomputed distance matrix. High-dimensional
 * affinities are Gaussian conditionals whose bandwidths are calibrated to a target
 * perplexity; the low-dimensional similarity is either the heavy-tailed Student-t joint
 * (t-SNE) or a Gaussian conditional with unit exponent scale (SNE). The embedding is
 * found by momentum gradient descent on the KL divergence.
 */

namespace trajal::tsne
{

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class LowDimMode { StudentT, GaussianConditional };

inline std::string_view to_string(LowDimMode m) noexcept
{
  return m == LowDimMode::StudentT ? "student-t" : "gaussian";
}

struct AffinityMatrix
{
  std::size_t n = 0;
  Matrix conditional;          //!< row i holds p(j|i); zero diagonal
  std::vector<double> sigma;   //!< calibrated Gaussian bandwidth per row
  Matrix joint;                //!< (P + P^T) / 2n

  /// Objective target for the chosen low-dimensional mode.
  const Matrix & target(LowDimMode mode) const noexcept
  {
    return mode == LowDimMode::StudentT ? joint : conditional;
  }
};

struct CalibrationOptions
{
  double tolerance = 1e-5;  //!< relative error of the realized perplexity
  int max_steps = 64;
};

/**
 * @brief Finds per-row Gaussian bandwidths that realize `perplexity`.
 *
 * Bisection runs on log(beta) with beta = 1 / (2 sigma^2), expressed in units of the row's
 * mean shifted squared distance so that the search interval is scale free. A row whose
 * off-diagonal distances are all equal yields the uniform conditional for any sigma.
 */
inline AffinityMatrix calibrate_bandwidths(
  const dtw::DistanceMatrix & d, double perplexity, const CalibrationOptions & options = {})
{
  const std::size_t n = d.size();
  if (n < 3) {
    fail(ErrorKind::InvalidArgument, "calibrate_bandwidths: need at least 3 points");
  }
  if (!(perplexity > 1.0) || perplexity > static_cast<double>(n - 1)) {
    fail(
      ErrorKind::InvalidArgument, "calibrate_bandwidths: perplexity " + std::to_string(perplexity) +
                                    " outside (1, n-1] for n = " + std::to_string(n));
  }
  for (double v : d.values()) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::Numerical, "calibrate_bandwidths: non-finite distance");
    }
  }

  AffinityMatrix a;
  a.n = n;
  a.conditional = Matrix::Zero(n, n);
  a.sigma.assign(n, 1.0);
  const double target_entropy = std::log(perplexity);

  std::vector<double> shifted(n), row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) {
        min_sq = std::min(min_sq, d(i, j) * d(i, j));
      }
    }
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      shifted[j] = j == i ? 0.0 : d(i, j) * d(i, j) - min_sq;
      scale += shifted[j];
    }
    scale /= static_cast<double>(n - 1);

    if (!(scale > 0.0)) {
      for (std::size_t j = 0; j < n; ++j) {
        a.conditional(i, j) = j == i ? 0.0 : 1.0 / static_cast<double>(n - 1);
      }
      continue;
    }

    // Entropy (nats) of the row for a given beta, filling `row` with probabilities.
    auto entropy_at = [&](double beta) {
      double z = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * shifted[j]);
        z += row[j];
        weighted += row[j] * shifted[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        row[j] /= z;
      }
      return std::log(z) + beta * weighted / z;
    };

    double lo = -50.0, hi = 50.0;
    double beta = 1.0 / scale;
    bool converged = false;
    for (int step = 0; step < options.max_steps; ++step) {
      const double u = 0.5 * (lo + hi);
      beta = std::exp(u) / scale;
      const double h = entropy_at(beta);
      const double realized = std::exp(h);
      if (std::abs(realized - perplexity) <= options.tolerance * perplexity) {
        converged = true;
        break;
      }
      // Entropy decreases as beta grows.
      if (h > target_entropy) {
        lo = u;
      } else {
        hi = u;
      }
    }
    if (!converged) {
      fail(
        ErrorKind::Numerical, "calibrate_bandwidths: bisection did not converge for row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < n; ++j) {
      a.conditional(i, j) = row[j];
    }
    a.sigma[i] = std::sqrt(1.0 / (2.0 * beta));
  }

  a.joint = (a.conditional + a.conditional.transpose()) / (2.0 * static_cast<double>(n));
  return a;
}

/**
 * @brief Low-dimensional similarities of the points in `y` (one point per row).
 *
 * StudentT: joint q(i,j) proportional to 1 / (1 + |yi - yj|^2), normalized over all ordered
 * pairs. GaussianConditional: q(j|i) proportional to exp(-|yi - yj|^2) per row, i.e. a fixed
 * bandwidth of 1/sqrt(2).
 */
inline Matrix low_dim_affinities(const Matrix & y, LowDimMode mode)
{
  const auto n = static_cast<std::size_t>(y.rows());
  if (n < 3) {
    fail(ErrorKind::InvalidArgument, "low_dim_affinities: need at least 3 points");
  }
  Matrix q = Matrix::Zero(n, n);
  if (mode == LowDimMode::StudentT) {
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) {
          q(i, j) = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
          z += q(i, j);
        }
      }
    }
    q /= z;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      // Shift by the nearest neighbour so that far-apart rows do not underflow to 0/0.
      double min_sq = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) {
          min_sq = std::min(min_sq, (y.row(i) - y.row(j)).squaredNorm());
        }
      }
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) {
          q(i, j) = std::exp(-((y.row(i) - y.row(j)).squaredNorm() - min_sq));
          z += q(i, j);
        }
      }
      q.row(i) /= z;
    }
  }
  return q;
}

/// KL(P || Q) summed over all entries with P > 0 (joint or row-conditional per mode).
inline double kl_divergence(const Matrix & p, const Matrix & y, LowDimMode mode)
{
  const Matrix q = low_dim_affinities(y, mode);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (i != j && p(i, j) > 0.0) {
        kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), std::numeric_limits<double>::min()));
      }
    }
  }
  return kl;
}

/**
 * @brief Gradient of the KL objective with respect to every embedded coordinate.
 *
 * StudentT: dC/dyi = 4 sum_j (Pij - Qij)(1 + |yi - yj|^2)^-1 (yi - yj).
 * GaussianConditional: dC/dyi = 2 sum_j (p(j|i) - q(j|i) + p(i|j) - q(i|j))(yi - yj).
 * Passing an exaggerated P scales only the attractive part, as in the reference optimizer.
 * Rows are independent; reductions run in fixed order, so any `workers` gives equal bits.
 */
inline Matrix kl_gradient(const Matrix & p, const Matrix & y, LowDimMode mode, std::size_t workers = 1)
{
  const auto n = static_cast<std::size_t>(y.rows());
  const Matrix q = low_dim_affinities(y, mode);
  Matrix grad = Matrix::Zero(y.rows(), y.cols());
  parallel_for(n, workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        continue;
      }
      double coeff;
      if (mode == LowDimMode::StudentT) {
        const double w = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        coeff = 4.0 * (p(i, j) - q(i, j)) * w;
      } else {
        coeff = 2.0 * (p(i, j) - q(i, j) + p(j, i) - q(j, i));
      }
      grad.row(i) += coeff * (y.row(i) - y.row(j));
    }
  });
  return grad;
}

struct EmbeddingConfig
{
  double perplexity = 37.5;
  std::size_t output_dim = 2;
  LowDimMode mode = LowDimMode::StudentT;
  int iterations = 1000;
  double learning_rate = 200.0;  //!< GaussianConditional has no heavy tail; it needs ~0.1
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iteration = 250;
  double exaggeration = 4.0;
  int exaggeration_iterations = 100;
  double init_stddev = 1e-2;
  bool adaptive_gains = true;
  double min_gain = 0.01;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  void validate(std::size_t n) const
  {
    require(iterations >= 1, "tsne: iterations must be >= 1");
    require(output_dim >= 1, "tsne: output dimension must be >= 1");
    require(learning_rate > 0.0, "tsne: learning rate must be positive");
    require(
      perplexity > 1.0 && perplexity < static_cast<double>(n) - 1.0,
      "tsne: perplexity must lie in (1, n-1), n = " + std::to_string(n));
  }
};

struct EmbeddingResult
{
  Matrix coords;                //!< n x output_dim
  std::vector<double> kl_trace;  //!< true (un-exaggerated) KL after each iteration
  AffinityMatrix affinities;
};

/**
 * @brief Runs the embedding optimizer from a seeded Gaussian initialization.
 *
 * Uses the reference schedule: early exaggeration of P, momentum switch, and per-coordinate
 * adaptive gains (delta-bar-delta). The trace holds KL against the un-exaggerated target.
 */
inline EmbeddingResult embed(const dtw::DistanceMatrix & d, const EmbeddingConfig & config)
{
  const std::size_t n = d.size();
  config.validate(n);

  EmbeddingResult result;
  result.affinities = calibrate_bandwidths(d, config.perplexity);
  const Matrix & p = result.affinities.target(config.mode);

  Rng rng(mix_seed(config.seed, 1));
  Matrix y(n, config.output_dim);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      y(i, k) = gaussian(rng, 0.0, config.init_stddev);
    }
  }
  Matrix update = Matrix::Zero(n, config.output_dim);
  Matrix gains = Matrix::Ones(n, config.output_dim);
  const Matrix p_exaggerated = p * config.exaggeration;

  result.kl_trace.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 0; it < config.iterations; ++it) {
    const bool exaggerating = it < config.exaggeration_iterations;
    const Matrix grad = kl_gradient(exaggerating ? p_exaggerated : p, y, config.mode, config.workers);
    const double momentum = it < config.momentum_switch_iteration ? config.initial_momentum : config.final_momentum;

    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      for (Eigen::Index k = 0; k < y.cols(); ++k) {
        if (config.adaptive_gains) {
          const bool same_sign = (grad(i, k) > 0.0) == (update(i, k) > 0.0);
          gains(i, k) = same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2;
          gains(i, k) = std::max(gains(i, k), config.min_gain);
        }
        update(i, k) = momentum * update(i, k) - config.learning_rate * gains(i, k) * grad(i, k);
        y(i, k) += update(i, k);
      }
    }
    const Eigen::RowVectorXd mean = y.colwise().mean();
    y.rowwise() -= mean;

    const double kl = kl_divergence(p, y, config.mode);
    if (!std::isfinite(kl) || !y.allFinite()) {
      fail(ErrorKind::Numerical, "tsne: KL divergence became non-finite at iteration " + std::to_string(it));
    }
    result.kl_trace.push_back(kl);
  }
  result.coords = std::move(y);
  return result;
}

/// Wraps optimizer output as tagged points in the order of `ids`.
inline Embedding to_embedding(const Matrix & coords, const std::vector<TrajectoryId> & ids)
{
  require(static_cast<std::size_t>(coords.rows()) == ids.size(), "to_embedding: row count differs from id count");
  std::vector<EmbeddedPoint> points;
  points.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    points.push_back({ids[i], EmbeddingTag::MTSNE, coords.row(static_cast<Eigen::Index>(i)).transpose()});
  }
  return Embedding(std::move(points));
}

}  // namespace trajal::tsne
