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

#include "edera/orchestrator.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "edera/daemon.hpp"
#include "edera/net_proxy.hpp"

namespace edera {
namespace {

TEST(Status, NamesAreStable) {
  EXPECT_EQ(to_string(ServiceStatus::kHealthy), "healthy");
  EXPECT_EQ(to_string(ServiceStatus::kDegraded), "degraded");
  EXPECT_EQ(to_string(ServiceStatus::kFailed), "failed");
}

TEST(Sweep, HealthyServicesAreLeftAlone) {
  Orchestrator orchestrator;
  int restarts_called = 0;
  orchestrator.register_service(
      "steady", {[] { return true; }, [&] { ++restarts_called; return true; }});

  for (std::uint64_t now = 0; now <= 1000; now += 100) {
    auto health = orchestrator.health_sweep(now);
    ASSERT_EQ(health.size(), 1u);
    EXPECT_EQ(health[0].status, ServiceStatus::kHealthy);
    EXPECT_EQ(health[0].restarts, 0u);
    EXPECT_EQ(health[0].last_check_ms, now);
  }
  EXPECT_EQ(restarts_called, 0);
}

TEST(Backoff, DoublesPerRestartUpToTheCap) {
  Orchestrator orchestrator;
  bool alive = false;
  orchestrator.register_service("flaky",
                                {[&] { return alive; }, [] { return false; }});

  // A dead service is restarted immediately, then at gaps that double:
  // 250, 500, 1000, 2000, 4000, 8000, and 8000 forever after.
  std::uint64_t now = 0;
  auto first = orchestrator.health_sweep(now);
  EXPECT_EQ(first[0].restarts, 1u);
  EXPECT_EQ(first[0].status, ServiceStatus::kDegraded);

  std::uint64_t expected_restarts = 1;
  for (std::uint64_t gap : {250u, 500u, 1000u, 2000u, 4000u, 8000u, 8000u, 8000u}) {
    // One tick before the window closes: down, but no restart attempt.
    auto waiting = orchestrator.health_sweep(now + gap - 1);
    EXPECT_EQ(waiting[0].restarts, expected_restarts) << "gap " << gap;
    EXPECT_EQ(waiting[0].status, ServiceStatus::kFailed);

    now += gap;
    auto retried = orchestrator.health_sweep(now);
    ++expected_restarts;
    EXPECT_EQ(retried[0].restarts, expected_restarts) << "gap " << gap;
    EXPECT_EQ(retried[0].status, ServiceStatus::kDegraded);
  }
}

TEST(Backoff, HealthyProbeResetsTheSchedule) {
  Orchestrator orchestrator;
  bool alive = false;
  orchestrator.register_service("lazarus",
                                {[&] { return alive; }, [] { return true; }});

  (void)orchestrator.health_sweep(0);     // restart #1, next window at 250
  (void)orchestrator.health_sweep(250);   // restart #2, next window at 750
  EXPECT_EQ(orchestrator.health()[0].restarts, 2u);

  alive = true;
  auto recovered = orchestrator.health_sweep(300);
  EXPECT_EQ(recovered[0].status, ServiceStatus::kHealthy);
  EXPECT_EQ(recovered[0].restarts, 2u);  // monotone: recovery never decrements

  // Fresh failure starts the schedule over: immediate restart, 250ms window.
  alive = false;
  auto again = orchestrator.health_sweep(400);
  EXPECT_EQ(again[0].restarts, 3u);
  EXPECT_EQ(orchestrator.health_sweep(649)[0].restarts, 3u);
  EXPECT_EQ(orchestrator.health_sweep(650)[0].restarts, 4u);
}

TEST(Restart, ThatTakesIsConfirmedByTheNextProbe) {
  Orchestrator orchestrator;
  bool alive = false;
  orchestrator.register_service(
      "fixable", {[&] { return alive; }, [&] { alive = true; return true; }});

  auto swept = orchestrator.health_sweep(0);
  EXPECT_EQ(swept[0].status, ServiceStatus::kDegraded);  // restarted, unproven
  auto proven = orchestrator.health_sweep(100);
  EXPECT_EQ(proven[0].status, ServiceStatus::kHealthy);
  EXPECT_EQ(proven[0].restarts, 1u);
}

TEST(Metrics, WithoutSourcesOnlyServiceLinesRender) {
  Orchestrator orchestrator;
  orchestrator.register_service("solo", {[] { return true; }, [] { return true; }});
  (void)orchestrator.health_sweep(5);
  EXPECT_EQ(orchestrator.render_metrics(),
            "edera_service_restarts_total{service=\"solo\"} 0\n"
            "edera_service_up{service=\"solo\"} 1\n");
}

std::string fresh_store_path() {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::path(::testing::TempDir()) / "edera_orch_tests";
  std::filesystem::create_directories(dir);
  return (dir / ("orch_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)) + ".log"))
      .string();
}

TEST(Metrics, FullRenderIsGoldenAndRepeatable) {
  DaemonConfig config;
  config.store_path = fresh_store_path();
  config.host = HostConfig{4, 262144, 4};
  config.heartbeat_interval_ms = 100;
  config.heartbeat_timeout_ms = 300;
  config.boot_delay_ms = 200;
  auto daemon = ZoneDaemon::open(config, std::make_unique<SeededUuidGenerator>(3)).take();

  ZoneSpec spec;
  spec.kernel_image = "kernels/test";
  spec.memory_mib = 64;
  spec.vcpus = 1;
  auto active = daemon.create_zone(spec, /*warm=*/false);
  ASSERT_TRUE(active.is_ok());
  for (std::uint64_t now = 100; now <= 400; now += 100) daemon.pump(now);
  ASSERT_EQ(daemon.zone(active.value().id).value().state, ZoneState::kActive);
  ASSERT_TRUE(daemon.create_zone(spec, false).is_ok());  // stays provisioning

  NetProxy proxy(daemon);
  const ZoneId src = active.value().id;
  ASSERT_TRUE(proxy.route_packet(src, PacketDst(src), std::vector<std::uint8_t>(10)).is_ok());
  ASSERT_TRUE(proxy.route_packet(src, PacketDst(src), std::vector<std::uint8_t>(20)).is_ok());
  auto dropped =
      proxy.route_packet(src, PacketDst(std::string("nowhere:1")), std::vector<std::uint8_t>(5));
  ASSERT_TRUE(dropped.is_ok());
  ASSERT_FALSE(dropped.value().delivered);

  Orchestrator orchestrator;
  orchestrator.attach_sources(&daemon, &proxy);
  orchestrator.register_service("zone-daemon", {[] { return true; }, [] { return true; }});
  bool proxy_alive = false;
  orchestrator.register_service("net-proxy",
                                {[&] { return proxy_alive; }, [] { return false; }});
  (void)orchestrator.health_sweep(1000);

  // 2 zones granted 64 MiB each: 262144 - 2*16384 free pages.
  const std::string expected =
      "edera_isolation_events_total 0\n"
      "edera_ledger_free_pages 229376\n"
      "edera_ledger_unpinned_cpus 4\n"
      "edera_net_bytes_delivered_total 30\n"
      "edera_net_bytes_dropped_total 5\n"
      "edera_net_bytes_seen_total 35\n"
      "edera_net_packets_delivered_total 2\n"
      "edera_net_packets_dropped_total 1\n"
      "edera_net_packets_seen_total 3\n"
      "edera_service_restarts_total{service=\"net-proxy\"} 1\n"
      "edera_service_restarts_total{service=\"zone-daemon\"} 0\n"
      "edera_service_up{service=\"net-proxy\"} 0\n"
      "edera_service_up{service=\"zone-daemon\"} 1\n"
      "edera_zones_created_total 2\n"
      "edera_zones_destroyed_total 0\n"
      "edera_zones{state=\"active\"} 1\n"
      "edera_zones{state=\"deprovisioned\"} 0\n"
      "edera_zones{state=\"not_responding\"} 0\n"
      "edera_zones{state=\"provisioning\"} 1\n"
      "edera_zones{state=\"quarantined\"} 0\n"
      "edera_zones{state=\"warm\"} 0\n";
  EXPECT_EQ(orchestrator.render_metrics(), expected);
  // No activity in between: the render is byte-identical.
  EXPECT_EQ(orchestrator.render_metrics(), orchestrator.render_metrics());
}

}  // namespace
}  // namespace edera
