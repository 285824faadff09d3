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

#include "edera/bench.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <gtest/gtest.h>

#include "edera/daemon.hpp"

namespace edera {
namespace {

TEST(Stats, MatchHandComputedValues) {
  const std::vector<double> samples = {1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(mean_of(samples), 2.5);
  // Sample variance of {1,2,3,4}: (2.25+0.25+0.25+2.25)/3 = 5/3.
  EXPECT_DOUBLE_EQ(sample_stddev(samples), std::sqrt(5.0 / 3.0));
  EXPECT_DOUBLE_EQ(stderr_of(samples), std::sqrt(5.0 / 3.0) / 2.0);

  EXPECT_DOUBLE_EQ(mean_of({}), 0.0);
  EXPECT_DOUBLE_EQ(sample_stddev({7.0}), 0.0);
  EXPECT_DOUBLE_EQ(stderr_of({7.0}), 0.0);
}

TEST(Reference, ValuesAreTheSixPublishedNumbers) {
  ASSERT_EQ(kPublishedStartupReference.size(), 6u);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[0].startup_ms, 177.4);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[1].startup_ms, 203.8);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[2].startup_ms, 281.8);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[3].startup_ms, 765.8);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[4].startup_ms, 968.6);
  EXPECT_DOUBLE_EQ(kPublishedStartupReference[5].startup_ms, 1934.2);
  for (std::size_t i = 1; i < kPublishedStartupReference.size(); ++i) {
    EXPECT_LT(kPublishedStartupReference[i - 1].startup_ms,
              kPublishedStartupReference[i].startup_ms);
  }
}

TEST(Reference, TableRendersGolden) {
  EXPECT_EQ(render_reference_table(),
            "published reference, startup ms (measured elsewhere, never asserted "
            "against this run):\n"
            "  Docker                177.4\n"
            "  Docker bare-metal     203.8\n"
            "  gVisor                281.8\n"
            "  Edera-PV              765.8\n"
            "  Edera-PVH             968.6\n"
            "  Kata                 1934.2\n");
}

std::string fresh_store_path() {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::path(::testing::TempDir()) / "edera_bench_tests";
  std::filesystem::create_directories(dir);
  return (dir / ("bench_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)) + ".log"))
      .string();
}

struct Fixture {
  Fixture() {
    DaemonConfig config;
    config.store_path = fresh_store_path();
    config.host = HostConfig{8, 262144, 4};
    config.heartbeat_interval_ms = 100;
    config.heartbeat_timeout_ms = 300;
    config.boot_delay_ms = 200;
    daemon = std::make_unique<ZoneDaemon>(
        ZoneDaemon::open(config, std::make_unique<SeededUuidGenerator>(11)).take());
  }

  std::unique_ptr<ZoneDaemon> daemon;
  LogicalClock clock;
};

TEST(Harness, ColdStartupMeasuresBootDelayPlusFirstBeat) {
  Fixture f;
  BenchHarness harness(*f.daemon, f.clock, /*quantum_ms=*/10);
  auto report = harness.startup(3, /*warm=*/false);
  ASSERT_TRUE(report.is_ok()) << report.error().to_string();

  // Logical mode is exact: boot delay 200 + one heartbeat interval 100.
  EXPECT_EQ(report.value().scenario, "startup-cold");
  EXPECT_EQ(report.value().runs, 3u);
  EXPECT_FALSE(report.value().wall_clock);
  ASSERT_EQ(report.value().samples_ms.size(), 3u);
  for (double sample : report.value().samples_ms) EXPECT_DOUBLE_EQ(sample, 300.0);
  EXPECT_DOUBLE_EQ(report.value().mean_ms, 300.0);
  EXPECT_DOUBLE_EQ(report.value().stderr_ms, 0.0);

  // Every timing zone is torn down afterwards.
  auto counts = f.daemon->zone_counts();
  EXPECT_EQ(counts.at(ZoneState::kDeprovisioned), 3u);
  EXPECT_EQ(counts.at(ZoneState::kActive), 0u);
  EXPECT_EQ(counts.at(ZoneState::kProvisioning), 0u);
}

TEST(Harness, WarmActivationSkipsTheBootDelay) {
  Fixture f;
  BenchHarness harness(*f.daemon, f.clock, 10);
  auto cold = harness.startup(5, false);
  ASSERT_TRUE(cold.is_ok()) << cold.error().to_string();
  auto warm = harness.startup(5, true);
  ASSERT_TRUE(warm.is_ok()) << warm.error().to_string();

  ASSERT_EQ(warm.value().samples_ms.size(), 5u);
  for (double sample : warm.value().samples_ms) EXPECT_DOUBLE_EQ(sample, 100.0);
  EXPECT_EQ(warm.value().scenario, "startup-warm");

  // The warm path pays only the heartbeat cadence, not the boot delay.
  EXPECT_LT(warm.value().mean_ms, 0.5 * cold.value().mean_ms);
}

TEST(Harness, StandardErrorIsRecomputableFromPublishedSamples) {
  Fixture f;
  BenchHarness harness(*f.daemon, f.clock, 10);
  auto report = harness.startup(4, true);
  ASSERT_TRUE(report.is_ok());
  EXPECT_DOUBLE_EQ(report.value().stderr_ms, stderr_of(report.value().samples_ms));
  EXPECT_DOUBLE_EQ(report.value().mean_ms, mean_of(report.value().samples_ms));
}

TEST(Harness, RejectsRunsTooFewForAStandardError) {
  Fixture f;
  BenchHarness harness(*f.daemon, f.clock, 10);
  EXPECT_EQ(harness.startup(0, false).code(), Errc::kInvalidArgument);
  EXPECT_EQ(harness.startup(1, false).code(), Errc::kInvalidArgument);
  EXPECT_EQ(f.daemon->zone_counts().at(ZoneState::kDeprovisioned), 0u);
}

TEST(Report, RenderCarriesSamplesStatsAndReferenceTable) {
  Fixture f;
  BenchHarness harness(*f.daemon, f.clock, 10);
  auto report = harness.startup(2, false);
  ASSERT_TRUE(report.is_ok());
  const std::string text = report.value().render();
  EXPECT_NE(text.find("benchmark: startup-cold\n"), std::string::npos);
  EXPECT_NE(text.find("clock: logical\n"), std::string::npos);
  EXPECT_NE(text.find("runs: 2\n"), std::string::npos);
  EXPECT_NE(text.find("samples_ms: 300.0 300.0\n"), std::string::npos);
  EXPECT_NE(text.find("mean_ms: 300.0\n"), std::string::npos);
  EXPECT_NE(text.find("stderr_ms: 0.0\n"), std::string::npos);
  EXPECT_NE(text.find("published reference"), std::string::npos);
  EXPECT_NE(text.find("1934.2"), std::string::npos);
}

}  // namespace
}  // namespace edera
