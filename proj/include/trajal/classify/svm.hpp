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

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/**
 * @file svm.hpp
 *
 * One-vs-rest soft-margin SVM. Each binary dual is solved by SMO with second-order working
 * set selection over a precomputed kernel matrix. Probabilities are the softmax of the
 * per-class decision values.
 */

namespace trajal::classify
{

enum class KernelKind { Rbf, Linear };

inline std::string_view to_string(KernelKind k) noexcept
{
  return k == KernelKind::Rbf ? "rbf" : "linear";
}

struct SvmParams
{
  KernelKind kernel = KernelKind::Rbf;
  std::optional<double> gamma;  //!< unset: 1 / (d * var(X)) over all training entries
  double c = 1.0;
  double tolerance = 1e-3;      //!< maximal violating pair gap at termination
  long max_iterations = 10'000'000;

  void validate() const
  {
    require(c > 0.0, "svm: C must be positive");
    require(tolerance > 0.0, "svm: tolerance must be positive");
    require(!gamma || *gamma > 0.0, "svm: gamma must be positive");
  }
};

struct Kernel
{
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd> & a, const Eigen::Ref<const Eigen::RowVectorXd> & b) const
  {
    if (kind == KernelKind::Linear) {
      return a.dot(b);
    }
    return std::exp(-gamma * (a - b).squaredNorm());
  }
};

/// Solution of one binary dual: alpha per training point, labels in {-1, +1}, offset rho.
/// Decision value f(x) = sum_i alpha_i y_i K(x_i, x) - rho.
struct BinarySvm
{
  std::vector<double> alpha;
  std::vector<int> y;
  double rho = 0.0;
  long iterations = 0;
  std::vector<std::size_t> support;  //!< indices with alpha > 0
};

namespace detail
{

/**
 * SMO on min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0, Q_ij = y_i y_j K_ij.
 * Working set: i maximizes -y G over I_up; j minimizes the second-order objective decrease
 * over I_low among pairs that violate optimality. Stops when the violation gap is < tolerance.
 */
inline BinarySvm solve_binary(const Eigen::MatrixXd & k, const std::vector<int> & y, double c, double tolerance, long max_iter)
{
  const auto n = static_cast<Eigen::Index>(y.size());
  constexpr double tau = 1e-12;
  BinarySvm s;
  s.y = y;
  s.alpha.assign(y.size(), 0.0);
  std::vector<double> g(y.size(), -1.0);
  auto & a = s.alpha;
  auto q = [&](Eigen::Index i, Eigen::Index j) { return static_cast<double>(y[i] * y[j]) * k(i, j); };
  auto upper = [&](Eigen::Index t) { return a[t] >= c; };
  auto lower = [&](Eigen::Index t) { return a[t] <= 0.0; };

  for (; s.iterations < max_iter; ++s.iterations) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == +1) {
        if (!upper(t) && -g[t] >= gmax) {
          gmax = -g[t];
          i = t;
        }
      } else if (!lower(t) && g[t] >= gmax) {
        gmax = g[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y[t] == +1) {
        if (!lower(t)) {
          const double diff = gmax + g[t];
          gmax2 = std::max(gmax2, g[t]);
          if (i >= 0 && diff > 0.0) {
            double quad = k(i, i) + k(t, t) - 2.0 * y[i] * q(i, t);
            quad = quad > 0.0 ? quad : tau;
            if (-(diff * diff) / quad <= best) {
              best = -(diff * diff) / quad;
              j = t;
            }
          }
        }
      } else if (!upper(t)) {
        const double diff = gmax - g[t];
        gmax2 = std::max(gmax2, -g[t]);
        if (i >= 0 && diff > 0.0) {
          double quad = k(i, i) + k(t, t) + 2.0 * y[i] * q(i, t);
          quad = quad > 0.0 ? quad : tau;
          if (-(diff * diff) / quad <= best) {
            best = -(diff * diff) / quad;
            j = t;
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tolerance) {
      break;
    }

    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
      quad = quad > 0.0 ? quad : tau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
      quad = quad > 0.0 ? quad : tau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = sum;
        }
        if (a[i] < 0.0) {
          a[i] = 0.0;
          a[j] = sum;
        }
      }
    }
    const double dai = a[i] - ai, daj = a[j] - aj;
    for (Eigen::Index t = 0; t < n; ++t) {
      g[t] += q(i, t) * dai + q(j, t) * daj;
    }
  }
  if (s.iterations >= max_iter) {
    fail(ErrorKind::Numerical, "svm: SMO did not converge within " + std::to_string(max_iter) + " iterations");
  }

  // rho: mean of y G over free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (upper(t)) {
      if (y[t] == -1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (lower(t)) {
      if (y[t] == +1) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  s.rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t] > 0.0) {
      s.support.push_back(t);
    }
  }
  return s;
}

}  // namespace detail

class SvmModel
{
public:
  SvmModel() = default;

  static SvmModel train(const Points & x, const std::vector<int> & labels, const SvmParams & params = {})
  {
    params.validate();
    require(x.rows() == static_cast<Eigen::Index>(labels.size()), "svm: point and label counts differ");
    require(x.rows() >= 2 && x.cols() >= 1, "svm: need at least two points");
    if (!x.allFinite()) {
      fail(ErrorKind::Numerical, "svm: non-finite training point");
    }
    SvmModel m;
    m.params_ = params;
    m.classes_ = class_list(labels);
    m.x_ = x;
    m.kernel_.kind = params.kernel;
    if (params.gamma) {
      m.kernel_.gamma = *params.gamma;
    } else {
      const double var = (x.array() - x.mean()).square().mean();
      m.kernel_.gamma = var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
    }
    const auto n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        k(i, j) = k(j, i) = m.kernel_(x.row(i), x.row(j));
      }
    }
    for (int cls : m.classes_) {
      std::vector<int> y(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        y[i] = labels[i] == cls ? +1 : -1;
      }
      m.problems_.push_back(detail::solve_binary(k, y, params.c, params.tolerance, params.max_iterations));
    }
    return m;
  }

  /// One-vs-rest decision values, one per class in `classes()` order.
  Eigen::VectorXd decision_values(const Eigen::Ref<const Eigen::RowVectorXd> & point) const
  {
    if (point.size() != x_.cols()) {
      fail(
        ErrorKind::InvalidArgument, "svm: point has dimension " + std::to_string(point.size()) + ", model expects " +
                                      std::to_string(x_.cols()));
    }
    std::vector<double> kv(static_cast<std::size_t>(x_.rows()), std::numeric_limits<double>::quiet_NaN());
    Eigen::VectorXd f(static_cast<Eigen::Index>(problems_.size()));
    for (std::size_t c = 0; c < problems_.size(); ++c) {
      const auto & p = problems_[c];
      double sum = -p.rho;
      for (auto i : p.support) {
        if (std::isnan(kv[i])) {
          kv[i] = kernel_(x_.row(static_cast<Eigen::Index>(i)), point);
        }
        sum += p.alpha[i] * p.y[i] * kv[i];
      }
      f[static_cast<Eigen::Index>(c)] = sum;
    }
    return f;
  }

  PredictiveDistribution predict_proba(const Eigen::Ref<const Eigen::RowVectorXd> & point) const
  {
    return {classes_, softmax(decision_values(point))};
  }

  int predict(const Eigen::Ref<const Eigen::RowVectorXd> & point) const
  {
    return predict_proba(point).argmax();
  }

  const std::vector<int> & classes() const noexcept { return classes_; }
  const std::vector<BinarySvm> & problems() const noexcept { return problems_; }
  const Kernel & kernel() const noexcept { return kernel_; }
  const SvmParams & params() const noexcept { return params_; }
  const Points & training_points() const noexcept { return x_; }

private:
  SvmParams params_;
  Kernel kernel_;
  std::vector<int> classes_;
  Points x_;
  std::vector<BinarySvm> problems_;
};

}  // namespace trajal::classify
