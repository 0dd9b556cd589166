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
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trajal
{

enum class TrajectoryId : std::uint32_t {};

constexpr std::uint32_t to_index(TrajectoryId id) noexcept
{
  return static_cast<std::uint32_t>(id);
}

enum class ClassLabel : std::uint8_t { LeftDriveBy, RightDriveBy, CutIn };

inline constexpr std::size_t kNumClasses = 3;

inline constexpr ClassLabel kAllClasses[kNumClasses] = {
  ClassLabel::LeftDriveBy, ClassLabel::RightDriveBy, ClassLabel::CutIn};

/// Generator-side metadata for cut-ins. Never shown to classifiers.
enum class CutInVariant : std::uint8_t { Plain, Double, Decelerative };

inline std::string_view to_string(ClassLabel label) noexcept
{
  switch (label) {
    case ClassLabel::LeftDriveBy:
      return "LeftDriveBy";
    case ClassLabel::RightDriveBy:
      return "RightDriveBy";
    case ClassLabel::CutIn:
      return "CutIn";
  }
  return "?";
}

inline std::string_view to_string(CutInVariant variant) noexcept
{
  switch (variant) {
    case CutInVariant::Plain:
      return "Plain";
    case CutInVariant::Double:
      return "Double";
    case CutInVariant::Decelerative:
      return "Decelerative";
  }
  return "?";
}

inline std::optional<ClassLabel> parse_class_label(std::string_view text) noexcept
{
  for (auto c : kAllClasses) {
    if (to_string(c) == text) {
      return c;
    }
  }
  return std::nullopt;
}

inline std::optional<CutInVariant> parse_cut_in_variant(std::string_view text) noexcept
{
  for (auto v : {CutInVariant::Plain, CutInVariant::Double, CutInVariant::Decelerative}) {
    if (to_string(v) == text) {
      return v;
    }
  }
  return std::nullopt;
}

/// One sample of a surrounding vehicle, relative to the ego vehicle.
struct Frame
{
  double lateral = 0.0;            //!< [m], positive to the left.
  double longitudinal = 0.0;       //!< [m], positive ahead.
  double relative_velocity = 0.0;  //!< [m/s], longitudinal, relative to ego.

  bool operator==(const Frame &) const = default;
};

inline constexpr std::size_t kFrameChannels = 3;

/// Time-major feature matrix (rows = frames, cols = channels) consumed by the embedders.
using Series = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Which frame channels feed the embeddings.
struct ChannelSelection
{
  bool use_velocity = true;

  std::size_t count() const noexcept { return use_velocity ? 3 : 2; }
};

class Trajectory
{
public:
  Trajectory() = default;
  Trajectory(
    TrajectoryId id, std::vector<Frame> frames, std::optional<ClassLabel> label = std::nullopt,
    std::optional<CutInVariant> variant = std::nullopt)
  : id_(id), frames_(std::move(frames)), label_(label), variant_(variant)
  {
    validate();
  }

  TrajectoryId id() const noexcept { return id_; }
  std::span<const Frame> frames() const noexcept { return frames_; }
  std::size_t length() const noexcept { return frames_.size(); }
  std::optional<ClassLabel> label() const noexcept { return label_; }
  std::optional<CutInVariant> variant() const noexcept { return variant_; }

  Series to_series(ChannelSelection channels = {}) const
  {
    Series s(frames_.size(), channels.count());
    for (std::size_t t = 0; t < frames_.size(); ++t) {
      s(t, 0) = frames_[t].lateral;
      s(t, 1) = frames_[t].longitudinal;
      if (channels.use_velocity) {
        s(t, 2) = frames_[t].relative_velocity;
      }
    }
    return s;
  }

  bool operator==(const Trajectory &) const = default;

private:
  void validate() const
  {
    if (frames_.size() < 2) {
      fail(ErrorKind::InvalidArgument, "trajectory " + std::to_string(to_index(id_)) + " has fewer than 2 frames");
    }
    for (const auto & f : frames_) {
      if (!std::isfinite(f.lateral) || !std::isfinite(f.longitudinal) || !std::isfinite(f.relative_velocity)) {
        fail(ErrorKind::InvalidArgument, "trajectory " + std::to_string(to_index(id_)) + " has a non-finite sample");
      }
    }
    if (variant_ && label_ != ClassLabel::CutIn) {
      fail(ErrorKind::InvalidArgument, "cut-in variant set on a non-cut-in trajectory");
    }
  }

  TrajectoryId id_{};
  std::vector<Frame> frames_;
  std::optional<ClassLabel> label_;
  std::optional<CutInVariant> variant_;
};

/**
 * @brief Immutable id-indexed collection of trajectories.
 *
 * Lookups through `at()` can optionally be recorded, which lets tests assert that a
 * trainer never touched a given subset (e.g. cut-ins during unknown-class runs).
 */
class TrajectoryStore
{
public:
  TrajectoryStore() = default;

  explicit TrajectoryStore(std::vector<Trajectory> trajectories) : items_(std::move(trajectories))
  {
    std::sort(items_.begin(), items_.end(), [](const auto & a, const auto & b) { return a.id() < b.id(); });
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (i > 0 && items_[i].id() == items_[i - 1].id()) {
        fail(ErrorKind::InvalidArgument, "duplicate trajectory id " + std::to_string(to_index(items_[i].id())));
      }
      index_.emplace(items_[i].id(), i);
    }
  }

  TrajectoryStore(const TrajectoryStore & other) : items_(other.items_), index_(other.index_) {}
  TrajectoryStore & operator=(const TrajectoryStore & other)
  {
    items_ = other.items_;
    index_ = other.index_;
    return *this;
  }
  TrajectoryStore(TrajectoryStore &&) = default;
  TrajectoryStore & operator=(TrajectoryStore &&) = default;

  std::size_t size() const noexcept { return items_.size(); }
  bool contains(TrajectoryId id) const { return index_.count(id) > 0; }

  const Trajectory & at(TrajectoryId id) const
  {
    auto it = index_.find(id);
    if (it == index_.end()) {
      fail(ErrorKind::NotFound, "unknown trajectory id " + std::to_string(to_index(id)));
    }
    {
      std::lock_guard<std::mutex> lock(*log_mutex_);
      if (logging_) {
        access_log_.push_back(id);
      }
    }
    return items_[it->second];
  }

  /// Iteration does not go through the access log; use it for serialization only.
  const std::vector<Trajectory> & all() const noexcept { return items_; }

  void enable_access_log(bool on = true) const
  {
    std::lock_guard<std::mutex> lock(*log_mutex_);
    logging_ = on;
  }

  std::vector<TrajectoryId> access_log() const
  {
    std::lock_guard<std::mutex> lock(*log_mutex_);
    return access_log_;
  }

  void clear_access_log() const
  {
    std::lock_guard<std::mutex> lock(*log_mutex_);
    access_log_.clear();
  }

  bool operator==(const TrajectoryStore & other) const { return items_ == other.items_; }

private:
  std::vector<Trajectory> items_;
  std::unordered_map<TrajectoryId, std::size_t> index_;
  mutable bool logging_ = false;
  mutable std::vector<TrajectoryId> access_log_;
  mutable std::unique_ptr<std::mutex> log_mutex_ = std::make_unique<std::mutex>();
};

/// Annotated / unlabeled / test id sets. Each list is kept sorted ascending.
struct DatasetPartition
{
  std::vector<TrajectoryId> annotated;
  std::vector<TrajectoryId> unlabeled;
  std::vector<TrajectoryId> test;

  std::size_t total() const noexcept { return annotated.size() + unlabeled.size() + test.size(); }

  /// Moves `id` from the unlabeled to the annotated set.
  void annotate(TrajectoryId id)
  {
    auto it = std::lower_bound(unlabeled.begin(), unlabeled.end(), id);
    if (it == unlabeled.end() || *it != id) {
      fail(ErrorKind::Conflict, "trajectory " + std::to_string(to_index(id)) + " is not in the unlabeled set");
    }
    unlabeled.erase(it);
    annotated.insert(std::lower_bound(annotated.begin(), annotated.end(), id), id);
  }

  bool is_disjoint() const
  {
    std::vector<TrajectoryId> all;
    all.reserve(total());
    all.insert(all.end(), annotated.begin(), annotated.end());
    all.insert(all.end(), unlabeled.begin(), unlabeled.end());
    all.insert(all.end(), test.begin(), test.end());
    std::sort(all.begin(), all.end());
    return std::adjacent_find(all.begin(), all.end()) == all.end();
  }

  void normalize()
  {
    std::sort(annotated.begin(), annotated.end());
    std::sort(unlabeled.begin(), unlabeled.end());
    std::sort(test.begin(), test.end());
  }

  bool operator==(const DatasetPartition &) const = default;
};

}  // namespace trajal
