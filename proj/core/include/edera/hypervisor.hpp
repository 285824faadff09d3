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

#ifndef EDERA_HYPERVISOR_HPP_
#define EDERA_HYPERVISOR_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edera/common.hpp"
#include "edera/zone.hpp"

namespace edera {

inline constexpr std::uint32_t kDefaultWeight = 256;
inline constexpr int kRootDomainId = 0;

struct HostConfig {
  std::uint32_t cpu_count = 1;
  std::uint64_t page_count = 1;
  std::uint32_t page_size_kib = 4;
};

struct DomainHandle {
  int domain_id = -1;
  std::uint32_t weight = kDefaultWeight;
};

// Point-in-time copy of the resource ledger, for assertions and fingerprints.
struct LedgerView {
  std::vector<std::optional<int>> cpu_grants;     // index: cpu
  std::map<int, std::uint64_t> page_grants;       // domain -> page count
  std::map<std::uint64_t, int> pt_entries;        // hardware page -> owner
  std::uint64_t free_pages = 0;
};

// Per-domain tick counts over one scheduling window. Every live domain is
// listed, including idle ones, so serialize() is stable across runs.
struct SchedTrace {
  std::uint64_t window_ticks = 0;
  std::uint32_t cpu_count = 0;
  std::map<int, std::uint64_t> ticks;

  std::string serialize() const;
};

struct ReleasedResources {
  std::uint64_t pages = 0;
  std::uint32_t cpus_unpinned = 0;
};

// Blocked guest accesses. Append-only; the control plane treats these as
// monitorable signals, never as control inputs.
struct IsolationEvent {
  enum class Kind : std::uint8_t {
    kPagetableWriteBlocked,
    kForeignWriteBlocked,
    kForeignReadBlocked,
  };
  Kind kind;
  int domain_id;
  std::uint64_t page;
};

// Simulated type-1 hypervisor. Boots with the root domain (id 0) already
// present; the root domain holds no pages and no vCPUs, it is the identity
// behind the privileged API. Single-writer: the owning daemon serializes
// all mutating calls.
class Hypervisor {
 public:
  static Result<Hypervisor> create(HostConfig config);

  const HostConfig& host() const { return host_; }

  // Rounds up. The page math every grant goes through.
  static std::uint64_t pages_for_mib(std::uint64_t mib, std::uint32_t page_size_kib);

  Result<DomainHandle> create_domain(const ZoneSpec& spec,
                                     std::uint32_t weight = kDefaultWeight,
                                     bool pin_exclusive = false);
  Result<ReleasedResources> destroy_domain(int domain_id);

  Status pin_cpu(int domain_id, std::uint32_t cpu);
  Status unpin_cpu(int domain_id, std::uint32_t cpu);

  // Returns the new total page grant. All-or-nothing.
  Result<std::uint64_t> grow_memory(int domain_id, std::uint64_t additional_mib);
  Status set_vcpus(int domain_id, std::uint32_t vcpus);

  // Guest-level accesses. These never mutate the ledger; violations are
  // recorded in isolation_events().
  Status guest_write_pagetable(int domain_id, std::uint64_t page);
  Status guest_write_memory(int domain_id, std::uint64_t page, std::size_t offset,
                            const std::vector<std::uint8_t>& data);
  Result<std::vector<std::uint8_t>> guest_read_memory(int domain_id, std::uint64_t page,
                                                      std::size_t offset, std::size_t len) const;

  // Privileged root path: moves one owned page to another live domain.
  // The page is zeroed in transit.
  Status admin_remap_page(std::uint64_t page, int new_owner);

  // Proportional-share scheduling over a fresh credit state each call:
  // identical inputs give identical traces. A domain is runnable when it
  // has at least one vCPU; pinned CPUs serve only their pinned domain while
  // pinned domains still compete for the shared pool.
  Result<SchedTrace> run_scheduler(std::uint64_t window_ticks) const;

  LedgerView ledger() const;
  std::uint64_t ledger_fingerprint() const;

  bool domain_exists(int domain_id) const;
  std::vector<int> domain_ids() const;
  std::uint64_t free_pages() const;
  std::uint32_t unpinned_cpu_count() const;
  std::uint64_t pages_granted(int domain_id) const;
  std::vector<std::uint32_t> pinned_cpus(int domain_id) const;
  std::uint32_t vcpus(int domain_id) const;
  std::uint32_t weight(int domain_id) const;

  const std::vector<IsolationEvent>& isolation_events() const { return events_; }

 private:
  struct Domain {
    int id = -1;
    std::uint32_t weight = kDefaultWeight;
    std::uint32_t vcpus = 0;
    std::uint64_t pages = 0;
    // Guest page table: guest-relative index -> hardware page, in grant
    // order. Remapped-in pages append; remapped-out pages compact the view.
    std::vector<std::uint64_t> page_table;
  };

  explicit Hypervisor(HostConfig config);

  Result<std::vector<std::uint64_t>> allocate_pages(std::uint64_t count);
  void release_page(std::uint64_t page);
  const Domain* find(int domain_id) const;
  Domain* find(int domain_id);

  HostConfig host_;
  std::map<int, Domain> domains_;
  std::vector<std::optional<int>> cpu_grants_;
  std::map<std::uint64_t, int> pt_entries_;
  std::set<std::uint64_t> free_pool_;
  // Sparse page contents; an absent page reads as zeros.
  std::map<std::uint64_t, std::vector<std::uint8_t>> page_data_;
  std::vector<IsolationEvent> events_;
  int next_domain_id_ = 1;
};

}  // namespace edera

#endif  // EDERA_HYPERVISOR_HPP_
