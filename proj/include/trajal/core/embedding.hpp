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
#include "trajal/core/io.hpp"
#include "trajal/core/trajectory.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trajal
{

enum class EmbeddingTag : std::uint8_t { MTSNE, RAE, VRAE };

inline std::string_view to_string(EmbeddingTag tag) noexcept
{
  switch (tag) {
    case EmbeddingTag::MTSNE:
      return "mTSNE";
    case EmbeddingTag::RAE:
      return "RAE";
    case EmbeddingTag::VRAE:
      return "VRAE";
  }
  return "?";
}

inline std::optional<EmbeddingTag> parse_embedding_tag(std::string_view text) noexcept
{
  for (auto t : {EmbeddingTag::MTSNE, EmbeddingTag::RAE, EmbeddingTag::VRAE}) {
    if (to_string(t) == text) {
      return t;
    }
  }
  return std::nullopt;
}

struct EmbeddedPoint
{
  TrajectoryId id{};
  EmbeddingTag tag = EmbeddingTag::MTSNE;
  Eigen::VectorXd coords;

  bool operator==(const EmbeddedPoint & o) const
  {
    return id == o.id && tag == o.tag && coords.size() == o.coords.size() && coords == o.coords;
  }
};

/// One embedding run: a point per trajectory, all with the same tag and dimension.
class Embedding
{
public:
  Embedding() = default;

  explicit Embedding(std::vector<EmbeddedPoint> points) : points_(std::move(points))
  {
    std::sort(points_.begin(), points_.end(), [](const auto & a, const auto & b) { return a.id < b.id; });
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto & p = points_[i];
      if (p.tag != points_.front().tag || p.coords.size() != points_.front().coords.size()) {
        fail(ErrorKind::InvalidArgument, "embedding: mixed tags or dimensions");
      }
      if (!p.coords.allFinite()) {
        fail(ErrorKind::Numerical, "embedding: non-finite coordinates for trajectory " + std::to_string(to_index(p.id)));
      }
      if (!index_.emplace(p.id, i).second) {
        fail(ErrorKind::InvalidArgument, "embedding: duplicate trajectory id " + std::to_string(to_index(p.id)));
      }
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::size_t dimension() const noexcept { return points_.empty() ? 0 : static_cast<std::size_t>(points_.front().coords.size()); }
  EmbeddingTag tag() const noexcept { return points_.empty() ? EmbeddingTag::MTSNE : points_.front().tag; }
  bool contains(TrajectoryId id) const { return index_.count(id) > 0; }

  const Eigen::VectorXd & at(TrajectoryId id) const
  {
    auto it = index_.find(id);
    if (it == index_.end()) {
      fail(ErrorKind::NotFound, "embedding has no point for trajectory " + std::to_string(to_index(id)));
    }
    return points_[it->second].coords;
  }

  const std::vector<EmbeddedPoint> & points() const noexcept { return points_; }

  bool operator==(const Embedding & o) const { return points_ == o.points_; }

private:
  std::vector<EmbeddedPoint> points_;
  std::unordered_map<TrajectoryId, std::size_t> index_;
};

/// Embedding records use the trajectory line format; coordinates keep 17 digits so a
/// reload reproduces the in-memory values exactly.
inline void write_embedding(std::ostream & out, const Embedding & e)
{
  char buf[40];
  for (const auto & p : e.points()) {
    out << "{\"id\":" << to_index(p.id) << ",\"tag\":\"" << to_string(p.tag) << "\",\"coords\":[";
    for (Eigen::Index k = 0; k < p.coords.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.coords[k]);
      out << (k ? "," : "") << buf;
    }
    out << "]}\n";
  }
}

inline Embedding read_embedding(std::istream & in)
{
  std::vector<EmbeddedPoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      auto j = Json::parse(line);
      EmbeddedPoint p;
      p.id = TrajectoryId{j.at("id").get<std::uint32_t>()};
      auto tag = parse_embedding_tag(j.at("tag").get<std::string>());
      require(tag.has_value(), "unknown embedding tag");
      p.tag = *tag;
      auto coords = j.at("coords").get<std::vector<double>>();
      p.coords = Eigen::Map<Eigen::VectorXd>(coords.data(), static_cast<Eigen::Index>(coords.size()));
      points.push_back(std::move(p));
    } catch (const Json::exception & e) {
      fail(ErrorKind::InvalidArgument, std::string("malformed embedding record: ") + e.what());
    }
  }
  return Embedding(std::move(points));
}

inline void save_embedding(const std::string & path, const Embedding & e)
{
  auto out = open_output(path);
  write_embedding(out, e);
}

inline Embedding load_embedding(const std::string & path)
{
  auto in = open_input(path);
  return read_embedding(in);
}

/// Two-column numeric trace "index value", one row per entry.
inline void write_trace(std::ostream & out, const std::vector<double> & trace, std::size_t first_index = 0)
{
  char buf[40];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace[i]);
    out << (first_index + i) << ' ' << buf << '\n';
  }
}

inline void save_trace(const std::string & path, const std::vector<double> & trace, std::size_t first_index = 0)
{
  auto out = open_output(path);
  write_trace(out, trace, first_index);
}

}  // namespace trajal
