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

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

namespace trajal::al
{

/**
 * @brief Append-only JSON-lines event log.
 *
 * Each record is written and flushed to the OS before `append` returns. A crash can leave at
 * most one partial last line; readers drop it and `open` cuts it off before appending again.
 */
class Journal
{
public:
  Journal() = default;

  explicit Journal(std::string path, bool sync = false) : path_(std::move(path)), sync_(sync)
  {
    truncate_partial_tail(path_);
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) {
      fail(ErrorKind::Io, "journal: cannot open " + path_);
    }
  }

  Journal(const Journal &) = delete;
  Journal & operator=(const Journal &) = delete;
  Journal(Journal && o) noexcept : path_(std::move(o.path_)), fd_(o.fd_), sync_(o.sync_) { o.fd_ = -1; }
  Journal & operator=(Journal && o) noexcept
  {
    std::swap(path_, o.path_);
    std::swap(fd_, o.fd_);
    std::swap(sync_, o.sync_);
    return *this;
  }
  ~Journal()
  {
    if (fd_ >= 0) {
      ::close(fd_);
    }
  }

  const std::string & path() const noexcept { return path_; }

  void append(const nlohmann::json & event)
  {
    const std::string line = event.dump() + "\n";
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n <= 0) {
        fail(ErrorKind::Io, "journal: write failed on " + path_);
      }
      done += static_cast<std::size_t>(n);
    }
    if (sync_) {
      ::fsync(fd_);
    }
  }

  /// Complete records of a journal file. A missing file yields no records.
  static std::vector<nlohmann::json> read(const std::string & path)
  {
    std::vector<nlohmann::json> events;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      return events;
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t start = 0;
    while (start < content.size()) {
      const auto end = content.find('\n', start);
      if (end == std::string::npos) {
        break;  // unterminated tail from an interrupted write
      }
      const auto line = content.substr(start, end - start);
      start = end + 1;
      if (line.empty()) {
        continue;
      }
      try {
        events.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception & e) {
        fail(ErrorKind::Io, "journal: corrupt record in " + path + ": " + e.what());
      }
    }
    return events;
  }

private:
  static void truncate_partial_tail(const std::string & path)
  {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      return;
    }
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto last = content.rfind('\n');
    const std::size_t keep = last == std::string::npos ? 0 : last + 1;
    if (keep != content.size()) {
      std::filesystem::resize_file(path, keep, ec);
      if (ec) {
        fail(ErrorKind::Io, "journal: cannot truncate " + path);
      }
    }
  }

  std::string path_;
  int fd_ = -1;
  bool sync_ = false;
};

}  // namespace trajal::al
