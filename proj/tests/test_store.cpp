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

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

namespace edera {
namespace {

namespace fs = std::filesystem;

std::string fresh_store_path() {
  static std::atomic<int> counter{0};
  const fs::path dir = fs::path(::testing::TempDir()) / "edera_store_tests";
  fs::create_directories(dir);
  return (dir / ("store_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)) + ".log"))
      .string();
}

std::vector<std::uint8_t> read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_raw(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// On-disk size of one record, computed independently of the implementation.
std::size_t record_bytes(std::size_t key_len, std::size_t value_len) {
  return 4 + 4 + key_len + value_len + 4;
}

TEST(Store, PutGetOverwriteAndMiss) {
  auto store = ZoneStore::open(fresh_store_path()).take();
  ASSERT_TRUE(store.put("zones/a", "one").is_ok());
  ASSERT_TRUE(store.put("zones/b", "two").is_ok());
  EXPECT_EQ(store.get("zones/a").take(), "one");

  ASSERT_TRUE(store.put("zones/a", "one-prime").is_ok());
  EXPECT_EQ(store.get("zones/a").take(), "one-prime");
  EXPECT_EQ(store.size(), 2u);

  auto missing = store.get("zones/c");
  ASSERT_FALSE(missing.is_ok());
  EXPECT_EQ(missing.code(), Errc::kNoSuchKey);
}

TEST(Store, ListReturnsPrefixMatchesInOrder) {
  auto store = ZoneStore::open(fresh_store_path()).take();
  ASSERT_TRUE(store.put("pods/b", "1").is_ok());
  ASSERT_TRUE(store.put("zones/2", "1").is_ok());
  ASSERT_TRUE(store.put("zones/10", "1").is_ok());
  ASSERT_TRUE(store.put("pods/a", "1").is_ok());
  ASSERT_TRUE(store.put("zone", "1").is_ok());

  EXPECT_EQ(store.list("zones/"), (std::vector<std::string>{"zones/10", "zones/2"}));
  EXPECT_EQ(store.list("pods/"), (std::vector<std::string>{"pods/a", "pods/b"}));
  EXPECT_EQ(store.list(""),
            (std::vector<std::string>{"pods/a", "pods/b", "zone", "zones/10", "zones/2"}));
  EXPECT_TRUE(store.list("nothing/").empty());
}

TEST(Store, KeyAndValueBoundsAreEnforced) {
  auto store = ZoneStore::open(fresh_store_path()).take();
  EXPECT_EQ(store.put("", "v").code(), Errc::kInvalidArgument);
  EXPECT_EQ(store.put(std::string(kMaxStoreKeyBytes + 1, 'k'), "v").code(),
            Errc::kInvalidArgument);
  EXPECT_TRUE(store.put(std::string(kMaxStoreKeyBytes, 'k'), "v").is_ok());
  EXPECT_EQ(store.put("big", std::string(kMaxStoreValueBytes + 1, 'v')).code(),
            Errc::kInvalidArgument);
  EXPECT_TRUE(store.put("empty-value", "").is_ok());
  EXPECT_EQ(store.get("empty-value").take(), "");
}

TEST(Store, SurvivesCloseAndReopen) {
  const auto path = fresh_store_path();
  {
    auto store = ZoneStore::open(path).take();
    for (int i = 0; i < 50; ++i) {
      ASSERT_TRUE(store.put("key/" + std::to_string(i), "value-" + std::to_string(i)).is_ok());
    }
    ASSERT_TRUE(store.put("key/7", "rewritten").is_ok());
  }
  auto reopened = ZoneStore::open(path).take();
  EXPECT_EQ(reopened.size(), 50u);
  EXPECT_EQ(reopened.get("key/7").take(), "rewritten");
  EXPECT_EQ(reopened.get("key/49").take(), "value-49");
}

TEST(Store, TornTailIsDiscardedAndTrimmed) {
  const auto path = fresh_store_path();
  {
    auto store = ZoneStore::open(path).take();
    ASSERT_TRUE(store.put("alpha", "1").is_ok());
    ASSERT_TRUE(store.put("beta", "2").is_ok());
  }
  const auto committed = read_raw(path);

  // A crash mid-append leaves a partial third record behind.
  auto torn = committed;
  torn.insert(torn.end(), {0x00, 0x00, 0x00, 0x05, 0x00, 0x00, 0x00, 0x02, 'g', 'a', 'm'});
  write_raw(path, torn);

  auto recovered = ZoneStore::open(path).take();
  EXPECT_EQ(recovered.size(), 2u);
  EXPECT_EQ(recovered.get("alpha").take(), "1");
  EXPECT_FALSE(recovered.get("gam").is_ok());
  // The file was trimmed back to the committed boundary so new appends land
  // on a record edge.
  EXPECT_EQ(fs::file_size(path), committed.size());

  ASSERT_TRUE(recovered.put("gamma", "3").is_ok());
  auto again = ZoneStore::open(path);
  // Still open in `recovered`; reopening is fine because appends flushed.
  EXPECT_EQ(again.take().get("gamma").take(), "3");
}

TEST(Store, CorruptRecordStopsReplayAtLastGoodBoundary) {
  const auto path = fresh_store_path();
  {
    auto store = ZoneStore::open(path).take();
    ASSERT_TRUE(store.put("first", "aaaa").is_ok());
    ASSERT_TRUE(store.put("second", "bbbb").is_ok());
    ASSERT_TRUE(store.put("third", "cccc").is_ok());
  }
  auto bytes = read_raw(path);
  const std::size_t first_len = record_bytes(5, 4);
  bytes[first_len + 10] ^= 0xFF;  // flip a byte inside the second record
  write_raw(path, bytes);

  auto recovered = ZoneStore::open(path).take();
  EXPECT_EQ(recovered.size(), 1u);
  EXPECT_EQ(recovered.get("first").take(), "aaaa");
  EXPECT_EQ(fs::file_size(path), first_len);
}

TEST(Store, RandomCrashPointsNeverCorruptRecovery) {
  // Oracle: with known key/value sizes the record boundaries are arithmetic,
  // so for any truncation point the set of surviving records is computable
  // without consulting the store.
  const auto base = fresh_store_path();
  std::vector<std::pair<std::string, std::string>> puts;
  std::vector<std::size_t> boundaries = {0};
  for (int i = 0; i < 12; ++i) {
    std::string key = "rec/" + std::to_string(i % 6);  // overwrites mixed in
    std::string value(static_cast<std::size_t>(10 + i * 7), static_cast<char>('a' + i));
    boundaries.push_back(boundaries.back() + record_bytes(key.size(), value.size()));
    puts.emplace_back(std::move(key), std::move(value));
  }
  {
    auto store = ZoneStore::open(base).take();
    for (const auto& [key, value] : puts) ASSERT_TRUE(store.put(key, value).is_ok());
  }
  const auto full = read_raw(base);
  ASSERT_EQ(full.size(), boundaries.back());

  std::mt19937 rng(1100);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t cut = rng() % (full.size() + 1);
    const auto path = fresh_store_path();
    write_raw(path, std::vector<std::uint8_t>(full.begin(), full.begin() + cut));

    // The expected map replays exactly the records wholly inside the cut.
    std::map<std::string, std::string> expected;
    for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
      if (boundaries[i + 1] <= cut) expected[puts[i].first] = puts[i].second;
    }

    auto recovered = ZoneStore::open(path).take();
    EXPECT_EQ(recovered.size(), expected.size()) << "cut=" << cut;
    for (const auto& [key, value] : expected) {
      EXPECT_EQ(recovered.get(key).take(), value) << "cut=" << cut << " key=" << key;
    }
    // Recovery is also stable: a second open of the trimmed file changes
    // nothing further.
    const auto trimmed_size = fs::file_size(path);
    auto reopened = ZoneStore::open(path).take();
    EXPECT_EQ(reopened.size(), expected.size());
    EXPECT_EQ(fs::file_size(path), trimmed_size);
  }
}

TEST(Store, CompactRewritesLiveMapOnly) {
  const auto path = fresh_store_path();
  auto store = ZoneStore::open(path).take();
  for (int i = 0; i < 200; ++i) {
    ASSERT_TRUE(store.put("hot", "version-" + std::to_string(i)).is_ok());
  }
  ASSERT_TRUE(store.put("cold", "untouched").is_ok());
  const auto before = fs::file_size(path);

  ASSERT_TRUE(store.compact().is_ok());
  const auto after = fs::file_size(path);
  EXPECT_LT(after, before / 10);
  EXPECT_FALSE(fs::exists(path + ".compact"));
  EXPECT_EQ(store.get("hot").take(), "version-199");
  EXPECT_EQ(store.get("cold").take(), "untouched");

  // The compacted log is a valid store in its own right.
  ASSERT_TRUE(store.put("post", "compaction").is_ok());
  auto reopened = ZoneStore::open(path).take();
  EXPECT_EQ(reopened.size(), 3u);
  EXPECT_EQ(reopened.get("hot").take(), "version-199");
  EXPECT_EQ(reopened.get("post").take(), "compaction");
}

TEST(Store, OpenFailsWhenDirectoryMissing) {
  auto store = ZoneStore::open("/nonexistent-dir-for-sure/store.log");
  ASSERT_FALSE(store.is_ok());
  EXPECT_EQ(store.code(), Errc::kStoreUnavailable);
}

TEST(ScopedHandle, FencesEveryOperationToItsPrefix) {
  auto store = ZoneStore::open(fresh_store_path()).take();
  ASSERT_TRUE(store.put("zones/other/secret", "hidden").is_ok());

  ScopedStoreHandle handle(store, "zones/a/");
  ASSERT_TRUE(handle.put("zones/a/state", "active").is_ok());
  EXPECT_EQ(handle.get("zones/a/state").take(), "active");

  EXPECT_EQ(handle.put("zones/other/secret", "overwrite").code(), Errc::kAccessDenied);
  EXPECT_EQ(handle.get("zones/other/secret").code(), Errc::kAccessDenied);
  EXPECT_EQ(handle.list("zones/").code(), Errc::kAccessDenied);
  EXPECT_EQ(handle.list("").code(), Errc::kAccessDenied);

  // The fence did not dent the underlying record.
  EXPECT_EQ(store.get("zones/other/secret").take(), "hidden");

  auto listed = handle.list("zones/a/").take();
  EXPECT_EQ(listed, std::vector<std::string>{"zones/a/state"});

  // Narrower prefixes inside the fence are fine.
  ASSERT_TRUE(handle.put("zones/a/devices/0", "bound").is_ok());
  EXPECT_EQ(handle.list("zones/a/devices/").take(),
            std::vector<std::string>{"zones/a/devices/0"});
}

TEST(ScopedHandle, PrefixItselfIsInsideTheFence) {
  auto store = ZoneStore::open(fresh_store_path()).take();
  ScopedStoreHandle handle(store, "ns/");
  // A key equal to the prefix is within scope; one merely sharing characters
  // is not.
  EXPECT_TRUE(handle.put("ns/", "marker").is_ok());
  EXPECT_EQ(handle.put("ns", "short").code(), Errc::kAccessDenied);
  EXPECT_EQ(handle.put("nsx/escape", "out").code(), Errc::kAccessDenied);
}

}  // namespace
}  // namespace edera
