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

#include <cstdint>
#include <random>

namespace trajal
{

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent child seeds from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) noexcept
{
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng & rng) noexcept
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng & rng, double lo, double hi) noexcept
{
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(Rng & rng, int lo, int hi)
{
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double gaussian(Rng & rng, double mean = 0.0, double stddev = 1.0)
{
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace trajal
