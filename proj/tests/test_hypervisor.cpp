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

#include "edera/hypervisor.hpp"

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "edera/zone.hpp"

namespace edera {
namespace {

ZoneSpec spec_mib(std::uint64_t mib, std::uint32_t vcpus = 1) {
  return ZoneSpec{.kernel_image = "test/kernel", .memory_mib = mib, .vcpus = vcpus};
}

Hypervisor small_host(std::uint32_t cpus = 4, std::uint64_t pages = 1024) {
  return Hypervisor::create(HostConfig{cpus, pages, 4}).take();
}

std::uint64_t total_granted(const Hypervisor& hv) {
  std::uint64_t total = 0;
  for (const auto& [domain, pages] : hv.ledger().page_grants) total += pages;
  return total;
}

TEST(PageMath, FourKibPagesPerMib) {
  EXPECT_EQ(Hypervisor::pages_for_mib(600, 4), 153600u);
  EXPECT_EQ(Hypervisor::pages_for_mib(256, 4), 65536u);
  EXPECT_EQ(Hypervisor::pages_for_mib(8192, 4), 2097152u);
  EXPECT_EQ(Hypervisor::pages_for_mib(0, 4), 0u);
}

TEST(PageMath, RoundsUpOnOddPageSizes) {
  // 1 MiB = 1024 KiB; 3 KiB pages -> ceil(1024/3) = 342.
  EXPECT_EQ(Hypervisor::pages_for_mib(1, 3), 342u);
  EXPECT_EQ(Hypervisor::pages_for_mib(1, 16), 64u);
}

TEST(Host, RejectsDegenerateConfigs) {
  EXPECT_FALSE(Hypervisor::create(HostConfig{0, 1024, 4}).is_ok());
  EXPECT_FALSE(Hypervisor::create(HostConfig{4, 0, 4}).is_ok());
}

TEST(RootDomain, ExistsResourceFreeAndUndestroyable) {
  auto hv = small_host();
  EXPECT_TRUE(hv.domain_exists(kRootDomainId));
  EXPECT_EQ(hv.pages_granted(kRootDomainId), 0u);
  EXPECT_EQ(hv.vcpus(kRootDomainId), 0u);

  auto destroyed = hv.destroy_domain(kRootDomainId);
  EXPECT_FALSE(destroyed.is_ok());
  EXPECT_EQ(destroyed.code(), Errc::kRootUndestroyable);
  EXPECT_TRUE(hv.domain_exists(kRootDomainId));
}

TEST(Domains, CreateGrantsPagesAndConserves) {
  auto hv = small_host(4, 1024);
  auto handle = hv.create_domain(spec_mib(1));  // 256 pages
  ASSERT_TRUE(handle.is_ok());
  EXPECT_GT(handle.value().domain_id, 0);
  EXPECT_EQ(hv.pages_granted(handle.value().domain_id), 256u);
  EXPECT_EQ(hv.free_pages(), 1024u - 256u);
  EXPECT_EQ(total_granted(hv) + hv.free_pages(), 1024u);
}

TEST(Domains, ZeroResourceCreationLeavesLedgerUntouched) {
  auto hv = small_host();
  const auto fingerprint = hv.ledger_fingerprint();
  auto handle = hv.create_domain(spec_mib(0, 0));
  ASSERT_TRUE(handle.is_ok());
  EXPECT_EQ(hv.pages_granted(handle.value().domain_id), 0u);
  EXPECT_EQ(hv.free_pages(), 1024u);
  // The domain exists but holds nothing; page/cpu accounting is unchanged.
  EXPECT_EQ(hv.ledger().page_grants.count(handle.value().domain_id), 1u);
  EXPECT_NE(hv.ledger_fingerprint(), fingerprint);  // domain set is part of identity
}

TEST(Domains, OverCommitIsRefusedAtomically) {
  auto hv = small_host(4, 1024);  // 4 MiB host
  auto handle = hv.create_domain(spec_mib(8));
  ASSERT_FALSE(handle.is_ok());
  EXPECT_EQ(handle.code(), Errc::kInsufficientMemory);
  EXPECT_EQ(hv.free_pages(), 1024u);
  EXPECT_EQ(hv.domain_ids().size(), 1u);  // only root
}

TEST(Domains, IdsAreNeverReused) {
  auto hv = small_host();
  const int first = hv.create_domain(spec_mib(0, 0)).take().domain_id;
  ASSERT_TRUE(hv.destroy_domain(first).is_ok());
  const int second = hv.create_domain(spec_mib(0, 0)).take().domain_id;
  EXPECT_NE(first, second);
  EXPECT_FALSE(hv.domain_exists(first));
}

TEST(Domains, DestroyReleasesEverything) {
  auto hv = small_host(4, 1024);
  const int domain = hv.create_domain(spec_mib(1)).take().domain_id;
  ASSERT_TRUE(hv.pin_cpu(domain, 2).is_ok());

  auto released = hv.destroy_domain(domain);
  ASSERT_TRUE(released.is_ok());
  EXPECT_EQ(released.value().pages, 256u);
  EXPECT_EQ(released.value().cpus_unpinned, 1u);
  EXPECT_EQ(hv.free_pages(), 1024u);
  EXPECT_EQ(hv.unpinned_cpu_count(), 4u);

  auto again = hv.destroy_domain(domain);
  EXPECT_FALSE(again.is_ok());
  EXPECT_EQ(again.code(), Errc::kNoSuchDomain);
}

TEST(Domains, ReleasedPagesComeBackZeroed) {
  auto hv = Hypervisor::create(HostConfig{2, 512, 4}).take();
  const int a = hv.create_domain(spec_mib(1)).take().domain_id;  // 256 of 512 pages
  const std::vector<std::uint8_t> pattern(32, 0xEE);
  ASSERT_TRUE(hv.guest_write_memory(a, 0, 0, pattern).is_ok());
  ASSERT_TRUE(hv.guest_write_memory(a, 255, 100, pattern).is_ok());
  ASSERT_TRUE(hv.destroy_domain(a).is_ok());

  // The replacement grant draws from the same pool; nothing may leak through.
  const int b = hv.create_domain(spec_mib(1)).take().domain_id;
  for (std::uint64_t page : {std::uint64_t{0}, std::uint64_t{255}}) {
    auto bytes = hv.guest_read_memory(b, page, 0, 4096);
    ASSERT_TRUE(bytes.is_ok());
    for (std::uint8_t byte : bytes.value()) ASSERT_EQ(byte, 0) << "page " << page;
  }
}

TEST(Pinning, IsExclusiveAndDynamic) {
  auto hv = small_host(4, 1024);
  const int a = hv.create_domain(spec_mib(0)).take().domain_id;
  const int b = hv.create_domain(spec_mib(0)).take().domain_id;

  ASSERT_TRUE(hv.pin_cpu(a, 2).is_ok());
  auto busy = hv.pin_cpu(b, 2);
  EXPECT_FALSE(busy.is_ok());
  EXPECT_EQ(busy.code(), Errc::kCpuBusy);

  ASSERT_TRUE(hv.unpin_cpu(a, 2).is_ok());
  EXPECT_TRUE(hv.pin_cpu(b, 2).is_ok());  // repin after unpin

  auto bad = hv.pin_cpu(a, 9);
  EXPECT_FALSE(bad.is_ok());
  EXPECT_EQ(bad.code(), Errc::kBadCpuIndex);

  auto ghost = hv.pin_cpu(999, 1);
  EXPECT_FALSE(ghost.is_ok());
  EXPECT_EQ(ghost.code(), Errc::kNoSuchDomain);

  auto not_mine = hv.unpin_cpu(a, 2);  // pinned to b
  EXPECT_FALSE(not_mine.is_ok());
  EXPECT_EQ(not_mine.code(), Errc::kNotPinnedHere);

  auto unpinned = hv.unpin_cpu(a, 0);  // pinned nowhere
  EXPECT_FALSE(unpinned.is_ok());
  EXPECT_EQ(unpinned.code(), Errc::kNotPinnedHere);
}

TEST(Memory, GrowIsAllOrNothing) {
  auto hv = small_host(4, 1024);
  const int domain = hv.create_domain(spec_mib(1)).take().domain_id;  // 256 pages

  auto total = hv.grow_memory(domain, 2);  // +512 pages
  ASSERT_TRUE(total.is_ok());
  EXPECT_EQ(total.value(), 768u);
  EXPECT_EQ(hv.free_pages(), 256u);

  auto too_much = hv.grow_memory(domain, 4);  // needs 1024 free, has 256
  ASSERT_FALSE(too_much.is_ok());
  EXPECT_EQ(too_much.code(), Errc::kInsufficientMemory);
  EXPECT_EQ(hv.pages_granted(domain), 768u);
  EXPECT_EQ(hv.free_pages(), 256u);

  auto zero = hv.grow_memory(domain, 0);
  EXPECT_FALSE(zero.is_ok());
  EXPECT_EQ(zero.code(), Errc::kInvalidArgument);
}

TEST(Memory, GrowDoesNotDescheduleTheDomain) {
  auto hv = small_host(1, 4096);
  const int domain = hv.create_domain(spec_mib(1)).take().domain_id;
  auto before = hv.run_scheduler(100).take();
  ASSERT_TRUE(hv.grow_memory(domain, 1).is_ok());
  auto after = hv.run_scheduler(100).take();
  EXPECT_EQ(before.ticks.at(domain), after.ticks.at(domain));
}

TEST(Isolation, PagetableWritesAlwaysFault) {
  auto hv = small_host();
  const int domain = hv.create_domain(spec_mib(1)).take().domain_id;
  const auto fingerprint = hv.ledger_fingerprint();
  const auto pt_before = hv.ledger().pt_entries;

  auto fault = hv.guest_write_pagetable(domain, 0);
  EXPECT_FALSE(fault.is_ok());
  EXPECT_EQ(fault.code(), Errc::kPermissionFault);

  EXPECT_EQ(hv.ledger_fingerprint(), fingerprint);
  EXPECT_EQ(hv.ledger().pt_entries, pt_before);
  ASSERT_EQ(hv.isolation_events().size(), 1u);
  EXPECT_EQ(hv.isolation_events()[0].kind, IsolationEvent::Kind::kPagetableWriteBlocked);
  EXPECT_EQ(hv.isolation_events()[0].domain_id, domain);
}

TEST(Isolation, ForeignMemoryAccessIsBlockedAndLogged) {
  auto hv = small_host();
  const int a = hv.create_domain(spec_mib(1)).take().domain_id;
  const int b = hv.create_domain(spec_mib(1)).take().domain_id;

  // Domain a addresses its own pages 0..255; page indexes beyond its grant
  // can only belong to someone else (or nobody).
  auto write = hv.guest_write_memory(a, 300, 0, {0x01});
  EXPECT_FALSE(write.is_ok());
  EXPECT_EQ(write.code(), Errc::kPermissionFault);

  auto read = hv.guest_read_memory(a, 300, 0, 16);
  EXPECT_FALSE(read.is_ok());
  EXPECT_EQ(read.code(), Errc::kPermissionFault);

  EXPECT_GE(hv.isolation_events().size(), 2u);
  // b's view is untouched by a's attempts.
  auto own = hv.guest_read_memory(b, 0, 0, 16);
  ASSERT_TRUE(own.is_ok());
  (void)own;
}

TEST(Isolation, GuestOpsNeverMutatePageTables) {
  auto hv = small_host();
  const int a = hv.create_domain(spec_mib(1)).take().domain_id;
  const auto pt_before = hv.ledger().pt_entries;

  (void)hv.guest_write_pagetable(a, 0);
  (void)hv.guest_write_memory(a, 0, 0, {0xFF, 0xFE});
  (void)hv.guest_write_memory(a, 999, 0, {0xFF});
  (void)hv.guest_read_memory(a, 0, 0, 64);
  (void)hv.guest_read_memory(a, 999, 0, 64);

  EXPECT_EQ(hv.ledger().pt_entries, pt_before);
}

TEST(Isolation, AdminRemapIsThePrivilegedPathAndZeroes) {
  auto hv = small_host();
  const int a = hv.create_domain(spec_mib(1)).take().domain_id;
  const int b = hv.create_domain(spec_mib(1)).take().domain_id;

  ASSERT_TRUE(hv.guest_write_memory(a, 0, 0, std::vector<std::uint8_t>(16, 0xAA)).is_ok());

  // Find a hardware page owned by a, move it to b via the root API.
  std::uint64_t hw_page = 0;
  for (const auto& [page, owner] : hv.ledger().pt_entries) {
    if (owner == a) {
      hw_page = page;
      break;
    }
  }
  ASSERT_TRUE(hv.admin_remap_page(hw_page, b).is_ok());
  EXPECT_EQ(hv.ledger().pt_entries.at(hw_page), b);
  EXPECT_EQ(hv.pages_granted(a), 255u);
  EXPECT_EQ(hv.pages_granted(b), 257u);

  // The transplanted page reads as zero for its new owner (page 256 is b's
  // newest page in guest-relative indexing).
  auto bytes = hv.guest_read_memory(b, 256, 0, 4096);
  ASSERT_TRUE(bytes.is_ok());
  for (std::uint8_t byte : bytes.value()) ASSERT_EQ(byte, 0);
}

// ---- scheduler --------------------------------------------------------------

TEST(Scheduler, SoleRunnableDomainGetsEveryTick) {
  auto hv = small_host(4, 1024);
  const int domain = hv.create_domain(spec_mib(0, 1)).take().domain_id;
  auto trace = hv.run_scheduler(50).take();
  EXPECT_EQ(trace.ticks.at(domain), 200u);  // 50 ticks x 4 cpus
  EXPECT_EQ(trace.ticks.at(kRootDomainId), 0u);
}

TEST(Scheduler, WeightedShareOneCpu) {
  auto hv = small_host(1, 1024);
  const int a = hv.create_domain(spec_mib(0, 1), 1).take().domain_id;
  const int b = hv.create_domain(spec_mib(0, 1), 2).take().domain_id;
  auto trace = hv.run_scheduler(300).take();
  EXPECT_NEAR(static_cast<double>(trace.ticks.at(a)), 100.0, 1.0);
  EXPECT_NEAR(static_cast<double>(trace.ticks.at(b)), 200.0, 1.0);
  EXPECT_EQ(trace.ticks.at(a) + trace.ticks.at(b), 300u);
}

TEST(Scheduler, PinnedCpuServesOnlyItsDomain) {
  auto hv = small_host(2, 1024);
  const int a = hv.create_domain(spec_mib(0, 1), 256).take().domain_id;
  const int b = hv.create_domain(spec_mib(0, 1), 256).take().domain_id;
  ASSERT_TRUE(hv.pin_cpu(a, 0).is_ok());

  auto trace = hv.run_scheduler(100).take();
  EXPECT_GE(trace.ticks.at(a), 100u);  // all of cpu 0, plus shared-pool share
  EXPECT_NEAR(static_cast<double>(trace.ticks.at(b)), 50.0, 1.0);
  EXPECT_EQ(trace.ticks.at(a) + trace.ticks.at(b), 200u);
}

TEST(Scheduler, ZeroVcpuDomainsAreIdleUntilGranted) {
  auto hv = small_host(1, 1024);
  const int idle = hv.create_domain(spec_mib(0, 0)).take().domain_id;
  const int busy = hv.create_domain(spec_mib(0, 1)).take().domain_id;

  auto trace = hv.run_scheduler(100).take();
  EXPECT_EQ(trace.ticks.at(idle), 0u);
  EXPECT_EQ(trace.ticks.at(busy), 100u);

  ASSERT_TRUE(hv.set_vcpus(idle, 1).is_ok());
  auto after = hv.run_scheduler(100).take();
  EXPECT_GT(after.ticks.at(idle), 0u);
}

TEST(Scheduler, NoRunnableDomainsIsAnError) {
  auto hv = small_host();
  auto trace = hv.run_scheduler(10);
  ASSERT_FALSE(trace.is_ok());
  EXPECT_EQ(trace.code(), Errc::kNoRunnableDomains);
}

TEST(Scheduler, DeterministicTraceBytes) {
  auto make = [] {
    auto hv = Hypervisor::create(HostConfig{3, 4096, 4}).take();
    (void)hv.create_domain(spec_mib(0, 1), 100);
    (void)hv.create_domain(spec_mib(0, 2), 300);
    const int c = hv.create_domain(spec_mib(0, 1), 256).take().domain_id;
    (void)hv.pin_cpu(c, 1);
    return hv.run_scheduler(777).take().serialize();
  };
  const std::string first = make();
  const std::string second = make();
  EXPECT_EQ(first, second);
  EXPECT_FALSE(first.empty());
}

TEST(Scheduler, ProportionalShareBoundHoldsForRandomWeights) {
  std::mt19937 rng(20260819);
  for (int round = 0; round < 10; ++round) {
    const std::uint32_t domains = 2 + rng() % 7;  // 2..8
    auto hv = Hypervisor::create(HostConfig{1, 4096, 4}).take();
    std::vector<int> ids;
    std::vector<std::uint32_t> weights;
    std::uint64_t weight_sum = 0;
    for (std::uint32_t i = 0; i < domains; ++i) {
      const std::uint32_t weight = 1 + rng() % 512;
      ids.push_back(hv.create_domain(spec_mib(0, 1), weight).take().domain_id);
      weights.push_back(weight);
      weight_sum += weight;
    }
    const std::uint64_t window = 100ull * domains;
    auto trace = hv.run_scheduler(window).take();
    for (std::uint32_t i = 0; i < domains; ++i) {
      const double expected =
          static_cast<double>(window) * weights[i] / static_cast<double>(weight_sum);
      const double got = static_cast<double>(trace.ticks.at(ids[i]));
      EXPECT_LE(std::abs(got - expected), static_cast<double>(domains))
          << "round " << round << " domain " << i << " weight " << weights[i];
    }
  }
}

TEST(Ledger, ConservationUnderRandomOperations) {
  std::mt19937 rng(97);
  auto hv = Hypervisor::create(HostConfig{8, 8192, 4}).take();
  std::vector<int> live;

  for (int op = 0; op < 300; ++op) {
    switch (rng() % 5) {
      case 0: {
        auto handle = hv.create_domain(spec_mib(rng() % 8, rng() % 3), 1 + rng() % 512);
        if (handle.is_ok()) live.push_back(handle.value().domain_id);
        break;
      }
      case 1:
        if (!live.empty()) {
          const std::size_t pick = rng() % live.size();
          (void)hv.destroy_domain(live[pick]);
          live.erase(live.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        break;
      case 2:
        if (!live.empty()) (void)hv.grow_memory(live[rng() % live.size()], 1 + rng() % 4);
        break;
      case 3:
        if (!live.empty()) (void)hv.pin_cpu(live[rng() % live.size()], rng() % 8);
        break;
      default:
        if (!live.empty()) (void)hv.unpin_cpu(live[rng() % live.size()], rng() % 8);
        break;
    }

    const auto ledger = hv.ledger();
    std::uint64_t granted = 0;
    for (const auto& [domain, pages] : ledger.page_grants) granted += pages;
    ASSERT_EQ(granted + ledger.free_pages, 8192u) << "op " << op;

    std::set<int> owners;
    for (const auto& grant : ledger.cpu_grants) {
      if (grant.has_value()) {
        // Exclusivity: each cpu names one owner; an owner may hold many cpus.
        ASSERT_TRUE(hv.domain_exists(*grant)) << "op " << op;
      }
    }
    // Every granted hardware page has exactly one owner by map construction;
    // check the counts reconcile.
    std::map<int, std::uint64_t> by_owner;
    for (const auto& [page, owner] : ledger.pt_entries) ++by_owner[owner];
    for (const auto& [domain, pages] : ledger.page_grants) {
      ASSERT_EQ(by_owner[domain], pages) << "op " << op << " domain " << domain;
    }
  }
}

}  // namespace
}  // namespace edera
