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
#include "trajal/common/random.hpp"
#include "trajal/core/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace trajal
{

struct VariantMixture
{
  double plain = 0.6;
  double double_cut_in = 0.2;
  double decelerative = 0.2;
};

/**
 * @brief Shape parameters of the synthetic highway scenes.
 *
 * Lateral positions are relative to the ego lane center (left positive); the ego lane
 * band is [-ego_half_width, +ego_half_width] and the adjacent lanes are centered at
 * +/- lane_offset. Time-valued parameters are in seconds.
 */
struct GeneratorParams
{
  int min_length = 30;
  int max_length = 120;
  double dt = 0.1;

  double lane_offset = 3.5;
  double ego_half_width = 1.75;
  double lateral_noise = 0.15;
  double lateral_noise_clip = 0.45;
  double lane_jitter = 0.3;

  double drive_by_speed_min = 2.0;
  double drive_by_speed_max = 8.0;
  double cut_in_speed_min = 0.5;
  double cut_in_speed_max = 4.0;
  double velocity_noise = 0.1;

  double steepness_min = 1.0;  //!< logistic steepness of lane changes [1/s]
  double steepness_max = 3.0;
  double midpoint_min = 0.25;  //!< lane-change midpoint as a fraction of the duration
  double midpoint_max = 0.75;

  double excursion_min = 2.5;  //!< lateral depth of the exit in a double cut-in [m]
  double excursion_max = 3.5;

  double decel_final_min = -4.0;  //!< final relative velocity of decelerative cut-ins [m/s]
  double decel_final_max = -1.0;
  double decel_ramp = 2.0;        //!< [s]

  VariantMixture mixture;

  void validate() const
  {
    require(min_length >= 2 && max_length >= min_length, "generator: invalid length range");
    require(dt > 0.0, "generator: dt must be positive");
    require(ego_half_width > 0.0 && lane_offset > ego_half_width, "generator: invalid lane geometry");
    require(lateral_noise >= 0.0 && lateral_noise_clip >= 0.0, "generator: invalid lateral noise");
    require(steepness_min > 0.0 && steepness_max >= steepness_min, "generator: invalid steepness range");
    require(
      midpoint_min >= 0.0 && midpoint_max <= 1.0 && midpoint_max >= midpoint_min,
      "generator: invalid midpoint range");
    require(excursion_min > ego_half_width && excursion_max >= excursion_min, "generator: invalid excursion range");
    require(decel_final_max < 0.0 && decel_final_min <= decel_final_max, "generator: invalid deceleration range");
    require(
      mixture.plain >= 0 && mixture.double_cut_in >= 0 && mixture.decelerative >= 0 &&
        mixture.plain + mixture.double_cut_in + mixture.decelerative > 0,
      "generator: invalid variant mixture");
  }
};

namespace detail
{

inline double logistic(double x) noexcept
{
  return 1.0 / (1.0 + std::exp(-x));
}

inline double clipped_noise(Rng & rng, double sigma, double clip)
{
  if (sigma <= 0.0) {
    return 0.0;
  }
  return std::clamp(gaussian(rng, 0.0, sigma), -clip, clip);
}

inline int count_band_crossings(const std::vector<Frame> & frames, double half_width)
{
  int crossings = 0;
  for (std::size_t t = 1; t < frames.size(); ++t) {
    bool before = std::abs(frames[t - 1].lateral) <= half_width;
    bool after = std::abs(frames[t].lateral) <= half_width;
    crossings += before != after ? 1 : 0;
  }
  return crossings;
}

inline CutInVariant draw_variant(const VariantMixture & m, Rng & rng)
{
  double u = uniform01(rng) * (m.plain + m.double_cut_in + m.decelerative);
  if (u < m.plain) {
    return CutInVariant::Plain;
  }
  if (u < m.plain + m.double_cut_in) {
    return CutInVariant::Double;
  }
  return CutInVariant::Decelerative;
}

/// Integrates relative velocity into longitudinal position in place.
inline void integrate_longitudinal(std::vector<Frame> & frames, double start, double dt)
{
  double lon = start;
  for (auto & f : frames) {
    f.longitudinal = lon;
    lon += f.relative_velocity * dt;
  }
}

inline std::vector<Frame> draw_drive_by(double side, const GeneratorParams & p, int length, Rng & rng)
{
  std::vector<Frame> frames(length);
  const double duration = (length - 1) * p.dt;
  const double center = side * p.lane_offset + uniform(rng, -p.lane_jitter, p.lane_jitter);
  const double direction = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  const double speed = direction * uniform(rng, p.drive_by_speed_min, p.drive_by_speed_max);
  for (auto & f : frames) {
    f.lateral = center + clipped_noise(rng, p.lateral_noise, p.lateral_noise_clip);
    f.relative_velocity = speed + gaussian(rng, 0.0, p.velocity_noise);
  }
  integrate_longitudinal(frames, -speed * duration / 2.0 + uniform(rng, -5.0, 5.0), p.dt);
  return frames;
}

inline std::vector<Frame> draw_cut_in(CutInVariant variant, const GeneratorParams & p, int length, Rng & rng)
{
  std::vector<Frame> frames(length);
  const double duration = (length - 1) * p.dt;
  const double side = uniform01(rng) < 0.5 ? -1.0 : 1.0;
  const double start_jitter = uniform(rng, -p.lane_jitter, p.lane_jitter);
  const double end_jitter = uniform(rng, -p.lane_jitter, p.lane_jitter);
  const double speed = uniform(rng, p.cut_in_speed_min, p.cut_in_speed_max);

  if (variant == CutInVariant::Double) {
    const double depth = uniform(rng, p.excursion_min, p.excursion_max);
    const double k_out = uniform(rng, p.steepness_min, p.steepness_max);
    const double k_in = uniform(rng, p.steepness_min, p.steepness_max);
    const double t_out = uniform(rng, 0.15, 0.4) * duration;
    const double t_in = uniform(rng, 0.6, 0.85) * duration;
    for (int t = 0; t < length; ++t) {
      double time = t * p.dt;
      double excursion = logistic(k_out * (time - t_out)) - logistic(k_in * (time - t_in));
      frames[t].lateral = start_jitter + side * depth * excursion +
                          clipped_noise(rng, p.lateral_noise, p.lateral_noise_clip);
      frames[t].relative_velocity = speed + gaussian(rng, 0.0, p.velocity_noise);
    }
  } else {
    const double k = uniform(rng, p.steepness_min, p.steepness_max);
    const double latest = std::max(0.0, duration - 4.5 / k);
    const double midpoint = std::min(uniform(rng, p.midpoint_min, p.midpoint_max) * duration, latest);
    const double origin = side * p.lane_offset + start_jitter;
    const double decel_target = uniform(rng, p.decel_final_min, p.decel_final_max);
    for (int t = 0; t < length; ++t) {
      double time = t * p.dt;
      double w = logistic(k * (time - midpoint));
      frames[t].lateral = origin * (1.0 - w) + end_jitter * w +
                          clipped_noise(rng, p.lateral_noise, p.lateral_noise_clip);
      double v = speed;
      if (variant == CutInVariant::Decelerative && time > midpoint) {
        double ramp = std::min(1.0, (time - midpoint) / p.decel_ramp);
        v = speed + (decel_target - speed) * ramp;
      }
      frames[t].relative_velocity = v + gaussian(rng, 0.0, p.velocity_noise);
    }
  }
  integrate_longitudinal(frames, uniform(rng, -5.0, 10.0), p.dt);
  return frames;
}

inline bool satisfies_shape(
  ClassLabel label, std::optional<CutInVariant> variant, const std::vector<Frame> & frames,
  const GeneratorParams & p)
{
  const auto lateral_within = [&](double lo, double hi) {
    return std::all_of(frames.begin(), frames.end(), [&](const Frame & f) { return f.lateral >= lo && f.lateral <= hi; });
  };
  switch (label) {
    case ClassLabel::LeftDriveBy:
      return lateral_within(p.lane_offset - 1.0, p.lane_offset + 1.0);
    case ClassLabel::RightDriveBy:
      return lateral_within(-p.lane_offset - 1.0, -p.lane_offset + 1.0);
    case ClassLabel::CutIn:
      break;
  }
  const double last_lateral = frames.back().lateral;
  switch (*variant) {
    case CutInVariant::Plain:
      return std::abs(last_lateral) <= 1.0 && count_band_crossings(frames, p.ego_half_width) == 1;
    case CutInVariant::Double:
      return count_band_crossings(frames, p.ego_half_width) == 2;
    case CutInVariant::Decelerative:
      return std::abs(last_lateral) <= 1.0 && count_band_crossings(frames, p.ego_half_width) == 1 &&
             frames.back().relative_velocity < 0.0;
  }
  return false;
}

}  // namespace detail

/**
 * @brief Draws one trajectory of the given class.
 *
 * Drive-bys hold a constant lane offset with clipped Gaussian noise and pass through
 * longitudinally. Cut-ins follow a logistic lane change into the ego lane; double cut-ins
 * leave and re-enter the ego lane band; decelerative cut-ins ramp the relative velocity
 * below zero after the lane change. Draws that violate a class postcondition (e.g. noise
 * producing an extra band crossing) are rejected and redrawn from the same stream.
 */
inline Trajectory generate_trajectory(
  TrajectoryId id, ClassLabel label, std::optional<CutInVariant> variant, const GeneratorParams & params,
  Rng & rng)
{
  if (label == ClassLabel::CutIn && !variant) {
    variant = detail::draw_variant(params.mixture, rng);
  }
  if (label != ClassLabel::CutIn) {
    variant.reset();
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const int length = uniform_int(rng, params.min_length, params.max_length);
    std::vector<Frame> frames;
    switch (label) {
      case ClassLabel::LeftDriveBy:
        frames = detail::draw_drive_by(+1.0, params, length, rng);
        break;
      case ClassLabel::RightDriveBy:
        frames = detail::draw_drive_by(-1.0, params, length, rng);
        break;
      case ClassLabel::CutIn:
        frames = detail::draw_cut_in(*variant, params, length, rng);
        break;
    }
    if (detail::satisfies_shape(label, variant, frames, params)) {
      return Trajectory(id, std::move(frames), label, variant);
    }
  }
  fail(ErrorKind::Numerical, "generator: could not satisfy the shape constraints of " + std::string(to_string(label)));
}

struct SplitCounts
{
  std::size_t annotated = 10;
  std::size_t unlabeled = 0;
  std::size_t test = 0;

  bool operator==(const SplitCounts &) const = default;
};

struct ClassCounts
{
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t cut_in = 0;

  std::size_t total() const noexcept { return left + right + cut_in; }
  bool operator==(const ClassCounts &) const = default;
};

struct DatasetSpec
{
  double alpha = 10.0;  //!< cut-in percentage of the unlabeled and test sets
  SplitCounts counts;
  std::uint64_t seed = 0;
  GeneratorParams generator;
};

struct Dataset
{
  DatasetSpec spec;
  TrajectoryStore store;
  DatasetPartition partition;
};

/// Split sizes of the reference study for alpha in {33, 10, 5}.
inline SplitCounts reference_counts(double alpha)
{
  if (alpha == 33.0) {
    return {10, 2211, 615};
  }
  if (alpha == 10.0) {
    return {10, 1769, 492};
  }
  if (alpha == 5.0) {
    return {10, 1563, 435};
  }
  fail(ErrorKind::InvalidArgument, "no reference split sizes for alpha = " + std::to_string(alpha));
}

/// Reference sizes scaled by 1/10 (the annotated seed set keeps its size).
inline SplitCounts desk_counts(double alpha)
{
  auto full = reference_counts(alpha);
  auto tenth = [](std::size_t n) { return static_cast<std::size_t>(std::lround(n / 10.0)); };
  return {full.annotated, tenth(full.unlabeled), tenth(full.test)};
}

/**
 * @brief Class composition of an unlabeled or test split.
 *
 * Cut-ins take round(alpha/100 * n); the rest splits evenly between left and right
 * drive-bys. When that leaves an odd remainder the cut-in count moves by one toward the
 * exact share, which keeps every class within one trajectory of the requested ratio.
 */
inline ClassCounts pool_class_counts(std::size_t n, double alpha)
{
  require(alpha >= 0.0 && alpha <= 100.0, "alpha must lie in [0, 100]");
  const double exact = alpha / 100.0 * static_cast<double>(n);
  auto cut_in = static_cast<long>(std::lround(exact));
  if ((static_cast<long>(n) - cut_in) % 2 != 0) {
    long candidate = exact >= static_cast<double>(cut_in) ? cut_in + 1 : cut_in - 1;
    if (candidate < 0 || candidate > static_cast<long>(n)) {
      candidate = candidate < 0 ? cut_in + 1 : cut_in - 1;
    }
    if (candidate < 0 || candidate > static_cast<long>(n) || std::abs(static_cast<double>(candidate) - exact) > 1.0) {
      fail(
        ErrorKind::Infeasible, "cannot split " + std::to_string(n) + " trajectories into " + std::to_string(alpha) +
                                 "% cut-ins with equal left and right drive-bys");
    }
    cut_in = candidate;
  }
  const auto drive_by = (n - static_cast<std::size_t>(cut_in)) / 2;
  return {drive_by, drive_by, static_cast<std::size_t>(cut_in)};
}

/// Balanced seed set; the remainder goes to left, then right drive-bys (10 -> 4/3/3).
inline ClassCounts annotated_class_counts(std::size_t n)
{
  if (n == 0) {
    return {};
  }
  if (n < kNumClasses) {
    fail(
      ErrorKind::Infeasible,
      "annotated set of " + std::to_string(n) + " cannot hold one trajectory per class");
  }
  ClassCounts c{n / 3, n / 3, n / 3};
  std::size_t rest = n % 3;
  c.left += rest > 0 ? 1 : 0;
  c.right += rest > 1 ? 1 : 0;
  return c;
}

/**
 * @brief Generates a labeled trajectory store and its three-way split.
 *
 * Deterministic in `spec` (including the seed). Class order inside each split is
 * shuffled before ids are assigned so that id order carries no class information.
 */
inline Dataset generate_dataset(const DatasetSpec & spec)
{
  spec.generator.validate();
  const ClassCounts annotated = annotated_class_counts(spec.counts.annotated);
  const ClassCounts unlabeled = pool_class_counts(spec.counts.unlabeled, spec.alpha);
  const ClassCounts test = pool_class_counts(spec.counts.test, spec.alpha);

  Rng rng(mix_seed(spec.seed, 0));
  std::vector<Trajectory> trajectories;
  trajectories.reserve(spec.counts.annotated + spec.counts.unlabeled + spec.counts.test);
  DatasetPartition partition;
  std::uint32_t next_id = 0;

  auto emit_split = [&](const ClassCounts & counts, std::vector<TrajectoryId> & ids) {
    std::vector<ClassLabel> labels;
    labels.insert(labels.end(), counts.left, ClassLabel::LeftDriveBy);
    labels.insert(labels.end(), counts.right, ClassLabel::RightDriveBy);
    labels.insert(labels.end(), counts.cut_in, ClassLabel::CutIn);
    for (std::size_t i = labels.size(); i > 1; --i) {
      std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng() % i)]);
    }
    for (auto label : labels) {
      TrajectoryId id{next_id++};
      trajectories.push_back(generate_trajectory(id, label, std::nullopt, spec.generator, rng));
      ids.push_back(id);
    }
  };
  emit_split(annotated, partition.annotated);
  emit_split(unlabeled, partition.unlabeled);
  emit_split(test, partition.test);

  return Dataset{spec, TrajectoryStore(std::move(trajectories)), std::move(partition)};
}

}  // namespace trajal
