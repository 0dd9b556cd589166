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
#include "trajal/core/generator.hpp"
#include "trajal/core/trajectory.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace trajal
{

using Json = nlohmann::json;

/// Shortest "%.9g" rendering; the text format stores 9 significant digits.
inline std::string format_number(double value)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VariantMixture, plain, double_cut_in, decelerative)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
  GeneratorParams, min_length, max_length, dt, lane_offset, ego_half_width, lateral_noise, lateral_noise_clip,
  lane_jitter, drive_by_speed_min, drive_by_speed_max, cut_in_speed_min, cut_in_speed_max, velocity_noise,
  steepness_min, steepness_max, midpoint_min, midpoint_max, excursion_min, excursion_max, decel_final_min,
  decel_final_max, decel_ramp, mixture)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitCounts, annotated, unlabeled, test)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DatasetSpec, alpha, counts, seed, generator)

inline std::ifstream open_input(const std::string & path)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::NotFound, "cannot open " + path);
  }
  return in;
}

inline std::ofstream open_output(const std::string & path)
{
  std::ofstream out(path);
  if (!out) {
    fail(ErrorKind::Io, "cannot write " + path);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory records: one JSON object per line,
//   {"id":7,"label":"CutIn","variant":"Double","frames":[[lat,lon,vrel],...]}
// ---------------------------------------------------------------------------

inline void write_trajectory(std::ostream & out, const Trajectory & t)
{
  out << "{\"id\":" << to_index(t.id());
  if (t.label()) {
    out << ",\"label\":\"" << to_string(*t.label()) << '"';
  }
  if (t.variant()) {
    out << ",\"variant\":\"" << to_string(*t.variant()) << '"';
  }
  out << ",\"frames\":[";
  bool first = true;
  for (const auto & f : t.frames()) {
    out << (first ? "" : ",") << '[' << format_number(f.lateral) << ',' << format_number(f.longitudinal) << ','
        << format_number(f.relative_velocity) << ']';
    first = false;
  }
  out << "]}\n";
}

inline void write_trajectories(std::ostream & out, const TrajectoryStore & store)
{
  for (const auto & t : store.all()) {
    write_trajectory(out, t);
  }
}

inline Trajectory parse_trajectory(const std::string & line)
{
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::exception & e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed trajectory record: ") + e.what());
  }
  try {
    std::optional<ClassLabel> label;
    std::optional<CutInVariant> variant;
    if (j.contains("label") && !j["label"].is_null()) {
      label = parse_class_label(j["label"].get<std::string>());
      require(label.has_value(), "unknown label " + j["label"].get<std::string>());
    }
    if (j.contains("variant") && !j["variant"].is_null()) {
      variant = parse_cut_in_variant(j["variant"].get<std::string>());
      require(variant.has_value(), "unknown variant " + j["variant"].get<std::string>());
    }
    std::vector<Frame> frames;
    for (const auto & row : j.at("frames")) {
      require(row.size() == kFrameChannels, "frame arity must be 3");
      frames.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    }
    return Trajectory(TrajectoryId{j.at("id").get<std::uint32_t>()}, std::move(frames), label, variant);
  } catch (const Json::exception & e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed trajectory record: ") + e.what());
  }
}

inline TrajectoryStore read_trajectories(std::istream & in)
{
  std::vector<Trajectory> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    items.push_back(parse_trajectory(line));
  }
  return TrajectoryStore(std::move(items));
}

inline void save_trajectories(const std::string & path, const TrajectoryStore & store)
{
  auto out = open_output(path);
  write_trajectories(out, store);
}

inline TrajectoryStore load_trajectories(const std::string & path)
{
  auto in = open_input(path);
  return read_trajectories(in);
}

// ---------------------------------------------------------------------------
// Dataset manifest: generation spec plus split membership.
// ---------------------------------------------------------------------------

inline std::vector<std::uint32_t> raw_ids(const std::vector<TrajectoryId> & ids)
{
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    out.push_back(to_index(id));
  }
  return out;
}

inline std::vector<TrajectoryId> typed_ids(const std::vector<std::uint32_t> & ids)
{
  std::vector<TrajectoryId> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    out.push_back(TrajectoryId{id});
  }
  return out;
}

inline Json partition_to_json(const DatasetPartition & p)
{
  return Json{{"annotated", raw_ids(p.annotated)}, {"unlabeled", raw_ids(p.unlabeled)}, {"test", raw_ids(p.test)}};
}

inline DatasetPartition partition_from_json(const Json & j)
{
  DatasetPartition p;
  p.annotated = typed_ids(j.at("annotated").get<std::vector<std::uint32_t>>());
  p.unlabeled = typed_ids(j.at("unlabeled").get<std::vector<std::uint32_t>>());
  p.test = typed_ids(j.at("test").get<std::vector<std::uint32_t>>());
  p.normalize();
  return p;
}

struct DatasetManifest
{
  DatasetSpec spec;
  DatasetPartition partition;
  std::string trajectories_file;  //!< relative to the manifest's directory, or absolute
};

inline Json manifest_to_json(const DatasetManifest & m)
{
  return Json{
    {"format", "trajal-dataset"},
    {"version", 1},
    {"spec", m.spec},
    {"trajectories", m.trajectories_file},
    {"splits", partition_to_json(m.partition)}};
}

inline DatasetManifest manifest_from_json(const Json & j)
{
  try {
    require(j.value("format", "") == "trajal-dataset", "not a dataset manifest");
    DatasetManifest m;
    m.spec = j.at("spec").get<DatasetSpec>();
    m.trajectories_file = j.value("trajectories", "");
    m.partition = partition_from_json(j.at("splits"));
    require(m.partition.is_disjoint(), "manifest splits overlap");
    return m;
  } catch (const Json::exception & e) {
    fail(ErrorKind::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
}

inline void save_manifest(const std::string & path, const DatasetManifest & m)
{
  auto out = open_output(path);
  out << manifest_to_json(m).dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::string & path)
{
  auto in = open_input(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception & e) {
    fail(ErrorKind::InvalidArgument, "malformed manifest " + path + ": " + e.what());
  }
  return manifest_from_json(j);
}

/// Writes `<dir>/trajectories.jsonl` and `<dir>/manifest.json`; returns the manifest path.
inline std::string save_dataset(const std::string & dir, const Dataset & d)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    fail(ErrorKind::Io, "cannot create directory " + dir);
  }
  const auto base = std::filesystem::path(dir);
  save_trajectories((base / "trajectories.jsonl").string(), d.store);
  const auto manifest = (base / "manifest.json").string();
  save_manifest(manifest, {d.spec, d.partition, "trajectories.jsonl"});
  return manifest;
}

inline Dataset load_dataset(const std::string & manifest_path)
{
  auto m = load_manifest(manifest_path);
  std::filesystem::path file(m.trajectories_file);
  if (!file.is_absolute()) {
    file = std::filesystem::path(manifest_path).parent_path() / file;
  }
  auto store = load_trajectories(file.string());
  for (const auto & ids : {m.partition.annotated, m.partition.unlabeled, m.partition.test}) {
    for (auto id : ids) {
      if (!store.contains(id)) {
        fail(ErrorKind::InvalidArgument, "manifest names trajectory " + std::to_string(to_index(id)) + " missing from " + file.string());
      }
    }
  }
  return {m.spec, std::move(store), std::move(m.partition)};
}

}  // namespace trajal
