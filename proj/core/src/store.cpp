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

#include "edera/store.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <system_error>
#include <utility>

namespace edera {
namespace {

constexpr std::size_t kLengthsBytes = 8;
constexpr std::size_t kCrcBytes = 4;

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t value) {
  out.push_back(static_cast<std::uint8_t>(value >> 24));
  out.push_back(static_cast<std::uint8_t>(value >> 16));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
  out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

// Replays the log, returning the live map and the byte offset where the
// committed data ends. Anything past that offset is a crash artifact.
std::pair<std::map<std::string, std::string>, std::size_t> replay(
    const std::vector<std::uint8_t>& log) {
  std::map<std::string, std::string> map;
  std::size_t pos = 0;
  while (true) {
    if (log.size() - pos < kLengthsBytes) break;
    const std::uint32_t key_len = get_u32_be(log.data() + pos);
    const std::uint32_t value_len = get_u32_be(log.data() + pos + 4);
    if (key_len == 0 || key_len > kMaxStoreKeyBytes || value_len > kMaxStoreValueBytes) break;
    const std::size_t record_len = kLengthsBytes + key_len + value_len + kCrcBytes;
    if (log.size() - pos < record_len) break;
    const std::uint32_t declared = get_u32_be(log.data() + pos + record_len - kCrcBytes);
    const std::uint32_t actual = crc32_ieee(log.data() + pos, record_len - kCrcBytes);
    if (declared != actual) break;
    std::string key(reinterpret_cast<const char*>(log.data() + pos + kLengthsBytes), key_len);
    std::string value(
        reinterpret_cast<const char*>(log.data() + pos + kLengthsBytes + key_len), value_len);
    map[std::move(key)] = std::move(value);
    pos += record_len;
  }
  return {std::move(map), pos};
}

Result<std::vector<std::uint8_t>> read_file(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"),
                                                    &std::fclose);
  if (!f) {
    return Error(Errc::kStoreUnavailable, path + ": " + std::strerror(errno));
  }
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[65536];
  while (true) {
    const std::size_t n = std::fread(buf, 1, sizeof buf, f.get());
    bytes.insert(bytes.end(), buf, buf + n);
    if (n < sizeof buf) break;
  }
  return bytes;
}

}  // namespace

std::vector<std::uint8_t> ZoneStore::encode_record(std::string_view key,
                                                   std::string_view value) {
  std::vector<std::uint8_t> record;
  record.reserve(kLengthsBytes + key.size() + value.size() + kCrcBytes);
  put_u32_be(record, static_cast<std::uint32_t>(key.size()));
  put_u32_be(record, static_cast<std::uint32_t>(value.size()));
  record.insert(record.end(), key.begin(), key.end());
  record.insert(record.end(), value.begin(), value.end());
  put_u32_be(record, crc32_ieee(record.data(), record.size()));
  return record;
}

Result<ZoneStore> ZoneStore::open(std::string path) {
  std::map<std::string, std::string> map;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    auto bytes = read_file(path);
    if (!bytes.is_ok()) return bytes.error();
    auto [recovered, committed_end] = replay(bytes.value());
    map = std::move(recovered);
    if (committed_end < bytes.value().size()) {
      // Drop the torn tail so future appends start at a record boundary.
      std::filesystem::resize_file(path, committed_end, ec);
      if (ec) {
        return Error(Errc::kStoreUnavailable, path + ": cannot trim torn tail");
      }
    }
  }
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "ab"));
  if (!file) {
    return Error(Errc::kStoreUnavailable, path + ": " + std::strerror(errno));
  }
  return ZoneStore(std::move(path), std::move(map), std::move(file));
}

Status ZoneStore::put(std::string_view key, std::string_view value) {
  if (key.empty() || key.size() > kMaxStoreKeyBytes) {
    return Status(Errc::kInvalidArgument, "key length out of range");
  }
  if (value.size() > kMaxStoreValueBytes) {
    return Status(Errc::kInvalidArgument, "value too large");
  }
  if (!file_) return Status(Errc::kStoreUnavailable, "store is not open");
  const auto record = encode_record(key, value);
  if (std::fwrite(record.data(), 1, record.size(), file_.get()) != record.size() ||
      std::fflush(file_.get()) != 0) {
    return Status(Errc::kStoreUnavailable, path_ + ": append failed");
  }
  map_[std::string(key)] = std::string(value);
  return Status::ok();
}

Result<std::string> ZoneStore::get(std::string_view key) const {
  const auto it = map_.find(std::string(key));
  if (it == map_.end()) {
    return Error(Errc::kNoSuchKey, std::string(key));
  }
  return it->second;
}

std::vector<std::string> ZoneStore::list(std::string_view prefix) const {
  std::vector<std::string> keys;
  for (auto it = map_.lower_bound(std::string(prefix)); it != map_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    keys.push_back(it->first);
  }
  return keys;
}

Status ZoneStore::compact() {
  if (!file_) return Status(Errc::kStoreUnavailable, "store is not open");
  const std::string tmp_path = path_ + ".compact";
  {
    std::unique_ptr<std::FILE, FileCloser> tmp(std::fopen(tmp_path.c_str(), "wb"));
    if (!tmp) return Status(Errc::kStoreUnavailable, tmp_path + ": " + std::strerror(errno));
    for (const auto& [key, value] : map_) {
      const auto record = encode_record(key, value);
      if (std::fwrite(record.data(), 1, record.size(), tmp.get()) != record.size()) {
        return Status(Errc::kStoreUnavailable, tmp_path + ": write failed");
      }
    }
    if (std::fflush(tmp.get()) != 0) {
      return Status(Errc::kStoreUnavailable, tmp_path + ": flush failed");
    }
  }
  file_.reset();  // release the old log before replacing it
  std::error_code ec;
  std::filesystem::rename(tmp_path, path_, ec);
  if (ec) return Status(Errc::kStoreUnavailable, path_ + ": rename failed");
  file_.reset(std::fopen(path_.c_str(), "ab"));
  if (!file_) return Status(Errc::kStoreUnavailable, path_ + ": reopen failed");
  return Status::ok();
}

bool ScopedStoreHandle::allowed(std::string_view key) const {
  return key.size() >= prefix_.size() && key.compare(0, prefix_.size(), prefix_) == 0;
}

Status ScopedStoreHandle::put(std::string_view key, std::string_view value) {
  if (!allowed(key)) {
    return Status(Errc::kAccessDenied, "key outside the handle's prefix");
  }
  return store_->put(key, value);
}

Result<std::string> ScopedStoreHandle::get(std::string_view key) const {
  if (!allowed(key)) {
    return Error(Errc::kAccessDenied, "key outside the handle's prefix");
  }
  return store_->get(key);
}

Result<std::vector<std::string>> ScopedStoreHandle::list(std::string_view prefix) const {
  if (!allowed(prefix)) {
    return Error(Errc::kAccessDenied, "prefix outside the handle's prefix");
  }
  return store_->list(prefix);
}

}  // namespace edera
