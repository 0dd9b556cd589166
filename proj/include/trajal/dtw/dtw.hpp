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
#include "trajal/core/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace trajal::dtw
{

struct DtwOptions
{
  /// Sakoe-Chiba half-width in frames; unset means unconstrained.
  std::optional<std::size_t> window;
  /// Divide the accumulated cost by (len_a + len_b).
  bool length_normalized = false;
};

/**
 * @brief Dynamic time warping distance between two multichannel series.
 *
 * Standard symmetric step pattern (match, insertion, deletion) with boundary anchoring;
 * the local cost is the Euclidean distance between frames and the result is the summed
 * cost along the optimal warping path.
 */
inline double dtw_distance(const Series & a, const Series & b, const DtwOptions & options = {})
{
  if (a.rows() == 0 || b.rows() == 0) {
    fail(ErrorKind::InvalidArgument, "dtw: empty series");
  }
  if (a.cols() != b.cols()) {
    fail(
      ErrorKind::InvalidArgument, "dtw: channel arity mismatch (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.cols()) + ")");
  }
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(b.rows());
  const auto channels = static_cast<std::size_t>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t band =
    options.window ? std::max(*options.window, n > m ? n - m : m - n) : std::max(n, m);

  std::vector<double> prev(m, inf), curr(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(curr.begin(), curr.end(), inf);
    const std::size_t j_lo = i > band ? i - band : 0;
    const std::size_t j_hi = std::min(m - 1, i + band);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double * ra = a.data() + i * channels;
      const double * rb = b.data() + j * channels;
      double sq = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double diff = ra[c] - rb[c];
        sq += diff * diff;
      }
      const double cost = std::sqrt(sq);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = inf;
        if (i > 0) {
          best = std::min(best, prev[j]);
        }
        if (j > 0) {
          best = std::min(best, curr[j - 1]);
        }
        if (i > 0 && j > 0) {
          best = std::min(best, prev[j - 1]);
        }
      }
      curr[j] = cost + best;
    }
    std::swap(prev, curr);
  }
  double total = prev[m - 1];
  if (options.length_normalized) {
    total /= static_cast<double>(n + m);
  }
  return total;
}

/// Symmetric n x n matrix of pairwise distances with a zero diagonal.
class DistanceMatrix
{
public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) noexcept
  {
    values_[i * n_ + j] = v;
    values_[j * n_ + i] = v;
  }

  const std::vector<double> & values() const noexcept { return values_; }

  bool operator==(const DistanceMatrix &) const = default;

private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Per-channel affine standardization fitted over every frame of a pool.
struct ChannelScaler
{
  std::vector<double> mean;
  std::vector<double> stddev;

  static ChannelScaler fit(const std::vector<Series> & pool)
  {
    require(!pool.empty(), "ChannelScaler::fit: empty pool");
    const auto channels = static_cast<std::size_t>(pool.front().cols());
    ChannelScaler s;
    s.mean.assign(channels, 0.0);
    s.stddev.assign(channels, 0.0);
    double count = 0.0;
    for (const auto & series : pool) {
      for (Eigen::Index t = 0; t < series.rows(); ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
          s.mean[c] += series(t, static_cast<Eigen::Index>(c));
        }
      }
      count += static_cast<double>(series.rows());
    }
    for (auto & m : s.mean) {
      m /= count;
    }
    for (const auto & series : pool) {
      for (Eigen::Index t = 0; t < series.rows(); ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
          double d = series(t, static_cast<Eigen::Index>(c)) - s.mean[c];
          s.stddev[c] += d * d;
        }
      }
    }
    for (auto & sd : s.stddev) {
      sd = std::sqrt(sd / count);
      if (!(sd > 1e-12)) {
        sd = 1.0;
      }
    }
    return s;
  }

  Series apply(const Series & series) const
  {
    Series out = series;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out.col(c).array() = (out.col(c).array() - mean[c]) / stddev[c];
    }
    return out;
  }
};

/// Fills the upper triangle (including every pair exactly once) and mirrors it.
inline DistanceMatrix pairwise_distances(
  const std::vector<Series> & pool, std::size_t workers = 1, const DtwOptions & options = {})
{
  if (pool.empty()) {
    fail(ErrorKind::InvalidArgument, "pairwise_distances: empty pool");
  }
  const std::size_t n = pool.size();
  DistanceMatrix d(n);
  // Rows are dealt to workers; each (i, j>i) slot is written by exactly one task.
  parallel_for(n, workers, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      try {
        d.set(i, j, dtw_distance(pool[i], pool[j], options));
      } catch (const Error & e) {
        fail(e.kind(), "pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
      }
    }
  });
  return d;
}

struct PairwiseOptions
{
  DtwOptions dtw;
  ChannelSelection channels;
  bool z_normalize = true;
  std::size_t workers = 1;
};

inline std::vector<Series> prepare_pool(
  const TrajectoryStore & store, const std::vector<TrajectoryId> & ids, const PairwiseOptions & options)
{
  std::vector<Series> pool;
  pool.reserve(ids.size());
  for (auto id : ids) {
    pool.push_back(store.at(id).to_series(options.channels));
  }
  if (options.z_normalize && !pool.empty()) {
    auto scaler = ChannelScaler::fit(pool);
    for (auto & s : pool) {
      s = scaler.apply(s);
    }
  }
  return pool;
}

inline DistanceMatrix pairwise_distances(
  const TrajectoryStore & store, const std::vector<TrajectoryId> & ids, const PairwiseOptions & options = {})
{
  return pairwise_distances(prepare_pool(store, ids, options), options.workers, options.dtw);
}

// ---------------------------------------------------------------------------
// Distance cache: header {magic, version, n, content hash}, then n*n float64
// values row-major, all little-endian host order.
// ---------------------------------------------------------------------------

inline constexpr char kCacheMagic[8] = {'T', 'R', 'J', 'D', 'T', 'W', '0', '1'};

class Fnv1a
{
public:
  void add(const void * data, std::size_t len) noexcept
  {
    const auto * p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }

  template <typename T>
  void add_value(const T & v) noexcept
  {
    add(&v, sizeof(T));
  }

  std::uint64_t value() const noexcept { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Hash of the prepared pool contents plus every option that changes the distances.
inline std::uint64_t content_hash(const std::vector<Series> & pool, const DtwOptions & options)
{
  Fnv1a h;
  h.add_value(static_cast<std::uint64_t>(pool.size()));
  for (const auto & s : pool) {
    h.add_value(static_cast<std::uint64_t>(s.rows()));
    h.add_value(static_cast<std::uint64_t>(s.cols()));
    h.add(s.data(), static_cast<std::size_t>(s.size()) * sizeof(double));
  }
  h.add_value(static_cast<std::uint64_t>(options.window.value_or(0)));
  h.add_value(static_cast<std::uint8_t>(options.window.has_value()));
  h.add_value(static_cast<std::uint8_t>(options.length_normalized));
  return h.value();
}

inline void save_cache(const std::string & path, const DistanceMatrix & d, std::uint64_t hash)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::Io, "cannot write distance cache " + path);
  }
  const std::uint32_t version = 1;
  const std::uint64_t n = d.size();
  out.write(kCacheMagic, sizeof(kCacheMagic));
  out.write(reinterpret_cast<const char *>(&version), sizeof(version));
  out.write(reinterpret_cast<const char *>(&n), sizeof(n));
  out.write(reinterpret_cast<const char *>(&hash), sizeof(hash));
  out.write(reinterpret_cast<const char *>(d.values().data()), static_cast<std::streamsize>(n * n * sizeof(double)));
  if (!out) {
    fail(ErrorKind::Io, "short write to distance cache " + path);
  }
}

/// Returns the cached matrix only when the file exists, is well formed, and its hash matches.
inline std::optional<DistanceMatrix> load_cache(const std::string & path, std::uint64_t expected_hash)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  char magic[sizeof(kCacheMagic)];
  std::uint32_t version = 0;
  std::uint64_t n = 0, hash = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char *>(&version), sizeof(version));
  in.read(reinterpret_cast<char *>(&n), sizeof(n));
  in.read(reinterpret_cast<char *>(&hash), sizeof(hash));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0 || version != 1 || hash != expected_hash) {
    return std::nullopt;
  }
  std::vector<double> values(n * n);
  in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) {
    return std::nullopt;
  }
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d.set(i, j, values[i * n + j]);
    }
  }
  return d;
}

}  // namespace trajal::dtw
