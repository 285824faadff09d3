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

#include <algorithm>
#include <utility>

namespace edera {
namespace {

// FNV-1a, 64-bit. Stable across platforms, cheap, good enough to detect any
// ledger drift in tests.
class Fnv1a {
 public:
  void feed(std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
      feed_byte(static_cast<std::uint8_t>(value >> (8 * i)));
    }
  }
  void feed_byte(std::uint8_t b) {
    hash_ ^= b;
    hash_ *= 0x100000001b3ULL;
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

std::string SchedTrace::serialize() const {
  std::string out = "window=" + std::to_string(window_ticks) +
                    " cpus=" + std::to_string(cpu_count);
  for (const auto& [domain, count] : ticks) {
    out += " " + std::to_string(domain) + ":" + std::to_string(count);
  }
  return out;
}

Hypervisor::Hypervisor(HostConfig config) : host_(config) {
  cpu_grants_.assign(host_.cpu_count, std::nullopt);
  for (std::uint64_t page = 0; page < host_.page_count; ++page) {
    free_pool_.insert(free_pool_.end(), page);
  }
  Domain root;
  root.id = kRootDomainId;
  root.weight = kDefaultWeight;
  domains_[kRootDomainId] = root;
}

Result<Hypervisor> Hypervisor::create(HostConfig config) {
  if (config.cpu_count < 1) {
    return Error(Errc::kInvalidArgument, "cpu_count must be at least 1");
  }
  if (config.page_count < 1) {
    return Error(Errc::kInvalidArgument, "page_count must be at least 1");
  }
  if (config.page_size_kib < 1) {
    return Error(Errc::kInvalidArgument, "page_size_kib must be at least 1");
  }
  return Hypervisor(config);
}

std::uint64_t Hypervisor::pages_for_mib(std::uint64_t mib, std::uint32_t page_size_kib) {
  const std::uint64_t kib = mib * 1024;
  return (kib + page_size_kib - 1) / page_size_kib;
}

const Hypervisor::Domain* Hypervisor::find(int domain_id) const {
  const auto it = domains_.find(domain_id);
  return it == domains_.end() ? nullptr : &it->second;
}

Hypervisor::Domain* Hypervisor::find(int domain_id) {
  const auto it = domains_.find(domain_id);
  return it == domains_.end() ? nullptr : &it->second;
}

Result<std::vector<std::uint64_t>> Hypervisor::allocate_pages(std::uint64_t count) {
  if (free_pool_.size() < count) {
    return Error(Errc::kInsufficientMemory,
                 "need " + std::to_string(count) + " pages, " +
                     std::to_string(free_pool_.size()) + " free");
  }
  std::vector<std::uint64_t> pages;
  pages.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto it = free_pool_.begin();
    pages.push_back(*it);
    free_pool_.erase(it);
  }
  return pages;
}

void Hypervisor::release_page(std::uint64_t page) {
  pt_entries_.erase(page);
  page_data_.erase(page);  // zeroed: absent pages read as zeros
  free_pool_.insert(page);
}

Result<DomainHandle> Hypervisor::create_domain(const ZoneSpec& spec, std::uint32_t weight,
                                               bool pin_exclusive) {
  if (weight == 0) {
    return Error(Errc::kInvalidArgument, "weight must be positive");
  }
  if (spec.vcpus > host_.cpu_count) {
    return Error(Errc::kInsufficientCpus,
                 "spec requests " + std::to_string(spec.vcpus) + " vcpus on a " +
                     std::to_string(host_.cpu_count) + "-cpu host");
  }
  const std::uint64_t pages = pages_for_mib(spec.memory_mib, host_.page_size_kib);
  std::vector<std::uint32_t> pins;
  if (pin_exclusive) {
    for (std::uint32_t cpu = 0; cpu < host_.cpu_count && pins.size() < spec.vcpus; ++cpu) {
      if (!cpu_grants_[cpu].has_value()) pins.push_back(cpu);
    }
    if (pins.size() < spec.vcpus) {
      return Error(Errc::kInsufficientCpus,
                   "need " + std::to_string(spec.vcpus) + " unpinned cpus, " +
                       std::to_string(pins.size()) + " available");
    }
  }
  auto granted = allocate_pages(pages);
  if (!granted.is_ok()) return granted.error();

  Domain domain;
  domain.id = next_domain_id_++;
  domain.weight = weight;
  domain.vcpus = spec.vcpus;
  domain.pages = pages;
  domain.page_table = granted.take();
  for (const auto page : domain.page_table) {
    pt_entries_[page] = domain.id;
  }
  for (const auto cpu : pins) {
    cpu_grants_[cpu] = domain.id;
  }
  domains_[domain.id] = domain;
  return DomainHandle{domain.id, weight};
}

Result<ReleasedResources> Hypervisor::destroy_domain(int domain_id) {
  if (domain_id == kRootDomainId) {
    return Error(Errc::kRootUndestroyable, "domain 0 is the root zone");
  }
  const Domain* domain = find(domain_id);
  if (domain == nullptr) {
    return Error(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  ReleasedResources released;
  std::vector<std::uint64_t> owned;
  for (const auto& [page, owner] : pt_entries_) {
    if (owner == domain_id) owned.push_back(page);
  }
  for (const auto page : owned) {
    release_page(page);
    ++released.pages;
  }
  for (auto& grant : cpu_grants_) {
    if (grant.has_value() && *grant == domain_id) {
      grant.reset();
      ++released.cpus_unpinned;
    }
  }
  domains_.erase(domain_id);
  return released;
}

Status Hypervisor::pin_cpu(int domain_id, std::uint32_t cpu) {
  if (find(domain_id) == nullptr) {
    return Status(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  if (cpu >= host_.cpu_count) {
    return Status(Errc::kBadCpuIndex, "cpu " + std::to_string(cpu) + " on a " +
                                          std::to_string(host_.cpu_count) + "-cpu host");
  }
  if (cpu_grants_[cpu].has_value()) {
    return Status(Errc::kCpuBusy, "cpu " + std::to_string(cpu) + " pinned to domain " +
                                      std::to_string(*cpu_grants_[cpu]));
  }
  cpu_grants_[cpu] = domain_id;
  return Status::ok();
}

Status Hypervisor::unpin_cpu(int domain_id, std::uint32_t cpu) {
  if (cpu >= host_.cpu_count || !cpu_grants_[cpu].has_value() ||
      *cpu_grants_[cpu] != domain_id) {
    return Status(Errc::kNotPinnedHere,
                  "cpu " + std::to_string(cpu) + " is not pinned to domain " +
                      std::to_string(domain_id));
  }
  cpu_grants_[cpu].reset();
  return Status::ok();
}

Result<std::uint64_t> Hypervisor::grow_memory(int domain_id, std::uint64_t additional_mib) {
  Domain* domain = find(domain_id);
  if (domain == nullptr) {
    return Error(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  if (additional_mib == 0) {
    return Error(Errc::kInvalidArgument, "grow_memory requires a positive amount");
  }
  const std::uint64_t pages = pages_for_mib(additional_mib, host_.page_size_kib);
  auto granted = allocate_pages(pages);
  if (!granted.is_ok()) return granted.error();
  for (const auto page : granted.value()) {
    pt_entries_[page] = domain_id;
    domain->page_table.push_back(page);
  }
  domain->pages += pages;
  return domain->pages;
}

Status Hypervisor::set_vcpus(int domain_id, std::uint32_t vcpus) {
  Domain* domain = find(domain_id);
  if (domain == nullptr) {
    return Status(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  if (vcpus > host_.cpu_count) {
    return Status(Errc::kInsufficientCpus,
                  std::to_string(vcpus) + " vcpus on a " +
                      std::to_string(host_.cpu_count) + "-cpu host");
  }
  domain->vcpus = vcpus;
  return Status::ok();
}

Status Hypervisor::guest_write_pagetable(int domain_id, std::uint64_t page) {
  // Guests see page tables read-only; every write attempt faults and is
  // surfaced to the monitoring path. The ledger is untouched.
  events_.push_back({IsolationEvent::Kind::kPagetableWriteBlocked, domain_id, page});
  return Status(Errc::kPermissionFault, "guest page tables are read-only");
}

Status Hypervisor::guest_write_memory(int domain_id, std::uint64_t page, std::size_t offset,
                                      const std::vector<std::uint8_t>& data) {
  const Domain* domain = find(domain_id);
  if (domain == nullptr) {
    return Status(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  const std::size_t page_bytes = static_cast<std::size_t>(host_.page_size_kib) * 1024;
  if (offset + data.size() > page_bytes) {
    return Status(Errc::kInvalidArgument, "write crosses the page boundary");
  }
  // Guest indexes resolve through the domain's own page table; anything past
  // the grant can only be someone else's memory, so it faults.
  if (page >= domain->page_table.size()) {
    events_.push_back({IsolationEvent::Kind::kForeignWriteBlocked, domain_id, page});
    return Status(Errc::kPermissionFault, "page is not mapped to this domain");
  }
  auto& bytes = page_data_[domain->page_table[page]];
  if (bytes.size() < page_bytes) bytes.resize(page_bytes, 0);
  std::copy(data.begin(), data.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset));
  return Status::ok();
}

Result<std::vector<std::uint8_t>> Hypervisor::guest_read_memory(int domain_id,
                                                                std::uint64_t page,
                                                                std::size_t offset,
                                                                std::size_t len) const {
  const Domain* domain = find(domain_id);
  if (domain == nullptr) {
    return Error(Errc::kNoSuchDomain, "domain " + std::to_string(domain_id));
  }
  const std::size_t page_bytes = static_cast<std::size_t>(host_.page_size_kib) * 1024;
  if (offset + len > page_bytes) {
    return Error(Errc::kInvalidArgument, "read crosses the page boundary");
  }
  if (page >= domain->page_table.size()) {
    // Const access still records the violation; the event log is the one
    // mutable member a read may touch.
    const_cast<Hypervisor*>(this)->events_.push_back(
        {IsolationEvent::Kind::kForeignReadBlocked, domain_id, page});
    return Error(Errc::kPermissionFault, "page is not mapped to this domain");
  }
  std::vector<std::uint8_t> out(len, 0);
  const auto data = page_data_.find(domain->page_table[page]);
  if (data != page_data_.end()) {
    const auto begin = data->second.begin() + static_cast<std::ptrdiff_t>(offset);
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(len), out.begin());
  }
  return out;
}

Status Hypervisor::admin_remap_page(std::uint64_t page, int new_owner) {
  if (find(new_owner) == nullptr) {
    return Status(Errc::kNoSuchDomain, "domain " + std::to_string(new_owner));
  }
  const auto owner = pt_entries_.find(page);
  if (owner == pt_entries_.end()) {
    return Status(Errc::kInvalidArgument, "page is not currently granted");
  }
  const int old_owner = owner->second;
  if (old_owner == new_owner) return Status::ok();
  Domain* from = find(old_owner);
  Domain* to = find(new_owner);
  if (from != nullptr) {
    --from->pages;
    std::erase(from->page_table, page);  // old owner's view compacts
  }
  ++to->pages;
  to->page_table.push_back(page);  // appears as the new owner's last page
  pt_entries_[page] = new_owner;
  page_data_.erase(page);  // zeroed in transit
  return Status::ok();
}

Result<SchedTrace> Hypervisor::run_scheduler(std::uint64_t window_ticks) const {
  if (window_ticks == 0) {
    return Error(Errc::kInvalidArgument, "window must be positive");
  }
  std::vector<int> runnable;
  for (const auto& [id, domain] : domains_) {
    if (domain.vcpus > 0) runnable.push_back(id);
  }
  if (runnable.empty()) {
    return Error(Errc::kNoRunnableDomains, "no domain has vcpus");
  }

  SchedTrace trace;
  trace.window_ticks = window_ticks;
  trace.cpu_count = host_.cpu_count;
  for (const auto& [id, domain] : domains_) {
    trace.ticks[id] = 0;
  }

  // Smooth weighted round-robin over the shared pool. Credit accumulates by
  // weight each slot; the highest balance runs and pays the pool total.
  // Fresh state per call keeps traces a pure function of the inputs.
  std::map<int, std::int64_t> credit;
  std::int64_t weight_sum = 0;
  for (const auto id : runnable) {
    credit[id] = 0;
    weight_sum += domains_.at(id).weight;
  }

  for (std::uint64_t tick = 0; tick < window_ticks; ++tick) {
    for (std::uint32_t cpu = 0; cpu < host_.cpu_count; ++cpu) {
      const auto& pin = cpu_grants_[cpu];
      if (pin.has_value()) {
        const Domain* pinned = find(*pin);
        if (pinned != nullptr && pinned->vcpus > 0) {
          ++trace.ticks[*pin];
        }
        continue;  // pinned cpu never joins the shared pool
      }
      int chosen = -1;
      std::int64_t best = 0;
      for (auto& [id, balance] : credit) {
        balance += domains_.at(id).weight;
        if (chosen < 0 || balance > best) {
          chosen = id;
          best = balance;
        }
      }
      credit[chosen] -= weight_sum;
      ++trace.ticks[chosen];
    }
  }
  return trace;
}

LedgerView Hypervisor::ledger() const {
  LedgerView view;
  view.cpu_grants = cpu_grants_;
  view.pt_entries = pt_entries_;
  view.free_pages = free_pool_.size();
  for (const auto& [id, domain] : domains_) {
    view.page_grants[id] = domain.pages;
  }
  return view;
}

std::uint64_t Hypervisor::ledger_fingerprint() const {
  Fnv1a hash;
  hash.feed(host_.cpu_count);
  hash.feed(host_.page_count);
  for (const auto& grant : cpu_grants_) {
    hash.feed(grant.has_value() ? static_cast<std::uint64_t>(*grant) + 1 : 0);
  }
  for (const auto& [id, domain] : domains_) {
    hash.feed(static_cast<std::uint64_t>(id));
    hash.feed(domain.weight);
    hash.feed(domain.vcpus);
    hash.feed(domain.pages);
  }
  for (const auto& [page, owner] : pt_entries_) {
    hash.feed(page);
    hash.feed(static_cast<std::uint64_t>(owner));
  }
  hash.feed(free_pool_.size());
  return hash.value();
}

bool Hypervisor::domain_exists(int domain_id) const { return find(domain_id) != nullptr; }

std::vector<int> Hypervisor::domain_ids() const {
  std::vector<int> ids;
  ids.reserve(domains_.size());
  for (const auto& [id, domain] : domains_) ids.push_back(id);
  return ids;
}

std::uint64_t Hypervisor::free_pages() const { return free_pool_.size(); }

std::uint32_t Hypervisor::unpinned_cpu_count() const {
  std::uint32_t count = 0;
  for (const auto& grant : cpu_grants_) {
    if (!grant.has_value()) ++count;
  }
  return count;
}

std::uint64_t Hypervisor::pages_granted(int domain_id) const {
  const Domain* domain = find(domain_id);
  return domain == nullptr ? 0 : domain->pages;
}

std::vector<std::uint32_t> Hypervisor::pinned_cpus(int domain_id) const {
  std::vector<std::uint32_t> cpus;
  for (std::uint32_t cpu = 0; cpu < cpu_grants_.size(); ++cpu) {
    if (cpu_grants_[cpu].has_value() && *cpu_grants_[cpu] == domain_id) {
      cpus.push_back(cpu);
    }
  }
  return cpus;
}

std::uint32_t Hypervisor::vcpus(int domain_id) const {
  const Domain* domain = find(domain_id);
  return domain == nullptr ? 0 : domain->vcpus;
}

std::uint32_t Hypervisor::weight(int domain_id) const {
  const Domain* domain = find(domain_id);
  return domain == nullptr ? 0 : domain->weight;
}

}  // namespace edera
