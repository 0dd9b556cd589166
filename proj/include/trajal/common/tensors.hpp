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
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>

namespace trajal
{

using Tensor = Eigen::MatrixXd;

/// Named parameter tensors. Ordered by name so iteration (init, Adam, file layout) is stable.
using TensorMap = std::map<std::string, Tensor>;

inline TensorMap zeros_like(const TensorMap & params)
{
  TensorMap out;
  for (const auto & [name, t] : params) {
    out.emplace(name, Tensor::Zero(t.rows(), t.cols()));
  }
  return out;
}

inline bool all_finite(const TensorMap & params)
{
  for (const auto & [name, t] : params) {
    if (!t.allFinite()) {
      return false;
    }
  }
  return true;
}

/// "name=|t|_F" for every tensor; attached to divergence errors.
inline std::string norm_report(const TensorMap & params)
{
  std::string out;
  for (const auto & [name, t] : params) {
    if (!out.empty()) {
      out += ", ";
    }
    out += name + "=" + std::to_string(t.norm());
  }
  return out;
}

inline constexpr char kTensorMagic[8] = {'T', 'R', 'J', 'T', 'N', 'S', '0', '1'};

/**
 * @brief Writes a JSON header and a list of named float64 tensors.
 *
 * Layout: magic, u64 header length, header bytes, u64 tensor count, then per tensor
 * u64 name length, name, u64 rows, u64 cols, rows*cols column-major doubles.
 * Little-endian host order; the format is not meant to cross architectures.
 */
inline void save_tensor_file(const std::string & path, const nlohmann::json & header, const TensorMap & tensors)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorKind::Io, "cannot open for writing: " + path);
  }
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char *>(&v), sizeof v); };
  const std::string head = header.dump();
  out.write(kTensorMagic, sizeof kTensorMagic);
  put_u64(head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  put_u64(tensors.size());
  for (const auto & [name, t] : tensors) {
    put_u64(name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(static_cast<std::uint64_t>(t.rows()));
    put_u64(static_cast<std::uint64_t>(t.cols()));
    out.write(reinterpret_cast<const char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) {
    fail(ErrorKind::Io, "write failed: " + path);
  }
}

inline std::pair<nlohmann::json, TensorMap> load_tensor_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::NotFound, "no such file: " + path);
  }
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!in) {
      fail(ErrorKind::Io, "truncated tensor file: " + path);
    }
    return v;
  };
  char magic[sizeof kTensorMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kTensorMagic, sizeof magic) != 0) {
    fail(ErrorKind::Io, "not a tensor file: " + path);
  }
  const auto head_len = get_u64();
  if (head_len > (1u << 24)) {
    fail(ErrorKind::Io, "corrupt tensor file header: " + path);
  }
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception & e) {
    fail(ErrorKind::Io, std::string("corrupt tensor file header: ") + e.what());
  }
  TensorMap tensors;
  const auto count = get_u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = get_u64();
    if (name_len > 4096) {
      fail(ErrorKind::Io, "corrupt tensor name: " + path);
    }
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const auto rows = get_u64();
    const auto cols = get_u64();
    if (rows > (1u << 20) || cols > (1u << 20)) {
      fail(ErrorKind::Io, "corrupt tensor shape for " + name);
    }
    Tensor t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) {
      fail(ErrorKind::Io, "truncated tensor " + name + " in " + path);
    }
    tensors.emplace(std::move(name), std::move(t));
  }
  return {std::move(header), std::move(tensors)};
}

struct AdamConfig
{
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a fixed set of named tensors.
class Adam
{
public:
  Adam() = default;
  Adam(const TensorMap & params, AdamConfig config) : config_(config), m_(zeros_like(params)), v_(zeros_like(params)) {}

  void step(TensorMap & params, const TensorMap & grads)
  {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto & [name, p] : params) {
      const auto g = grads.find(name);
      if (g == grads.end()) {
        continue;
      }
      auto & m = m_.at(name);
      auto & v = v_.at(name);
      m = config_.beta1 * m + (1.0 - config_.beta1) * g->second;
      v = config_.beta2 * v + (1.0 - config_.beta2) * g->second.cwiseAbs2();
      p.array() -= config_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
    }
  }

  long steps() const noexcept { return t_; }

private:
  AdamConfig config_;
  TensorMap m_, v_;
  long t_ = 0;
};

}  // namespace trajal
