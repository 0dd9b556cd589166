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

#include <stdexcept>
#include <string>
#include <string_view>

namespace trajal
{

/// Coarse error category, used for CLI exit records and HTTP status mapping.
enum class ErrorKind {
  InvalidArgument,
  Infeasible,
  NotFound,
  Conflict,
  Numerical,
  Io,
  Timeout,
};

inline std::string_view to_string(ErrorKind kind) noexcept
{
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid_argument";
    case ErrorKind::Infeasible:
      return "infeasible";
    case ErrorKind::NotFound:
      return "not_found";
    case ErrorKind::Conflict:
      return "conflict";
    case ErrorKind::Numerical:
      return "numerical";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Timeout:
      return "timeout";
  }
  return "unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string & what)
{
  throw Error(kind, what);
}

inline void require(bool condition, const std::string & what)
{
  if (!condition) {
    throw Error(ErrorKind::InvalidArgument, what);
  }
}

}  // namespace trajal
