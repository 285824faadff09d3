// Copyright 2026 The edera-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not
// use this file except in compliance with the License. You may obtain a copy of
// the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations under
// the License.

#ifndef EDERA_STORE_HPP_
#define EDERA_STORE_HPP_

#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "edera/common.hpp"

namespace edera {

inline constexpr std::size_t kMaxStoreKeyBytes = 4096;
inline constexpr std::size_t kMaxStoreValueBytes = 16 * 1024 * 1024;

// Append-only key-value store. One record per put:
//   key_len u32 BE | value_len u32 BE | key | value | crc32 u32 BE
// with the checksum covering everything before it. Recovery replays records
// in order and silently discards an incomplete or corrupt tail, which is the
// only damage a crash mid-append can cause. Full layout: docs/store-format.md.
class ZoneStore {
 public:
  static Result<ZoneStore> open(std::string path);

  ZoneStore(ZoneStore&&) = default;
  ZoneStore& operator=(ZoneStore&&) = default;

  // Durable once it returns: the record is appended and flushed.
  Status put(std::string_view key, std::string_view value);
  Result<std::string> get(std::string_view key) const;
  // Keys under prefix, lexicographic.
  std::vector<std::string> list(std::string_view prefix) const;

  // Rewrites the live map as a fresh log and atomically replaces the file.
  Status compact();

  std::size_t size() const { return map_.size(); }
  const std::string& path() const { return path_; }

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f != nullptr) std::fclose(f);
    }
  };

  ZoneStore(std::string path, std::map<std::string, std::string> map,
            std::unique_ptr<std::FILE, FileCloser> file)
      : path_(std::move(path)), map_(std::move(map)), file_(std::move(file)) {}

  static std::vector<std::uint8_t> encode_record(std::string_view key, std::string_view value);

  std::string path_;
  std::map<std::string, std::string> map_;
  std::unique_ptr<std::FILE, FileCloser> file_;
};

// Store access fenced to one key prefix. Handed to per-zone callers so a
// compromised workload cannot read or write another zone's records.
class ScopedStoreHandle {
 public:
  ScopedStoreHandle(ZoneStore& store, std::string prefix)
      : store_(&store), prefix_(std::move(prefix)) {}

  Status put(std::string_view key, std::string_view value);
  Result<std::string> get(std::string_view key) const;
  Result<std::vector<std::string>> list(std::string_view prefix) const;

  const std::string& prefix() const { return prefix_; }

 private:
  bool allowed(std::string_view key) const;

  ZoneStore* store_;
  std::string prefix_;
};

}  // namespace edera

#endif  // EDERA_STORE_HPP_
