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

#include "edera/scenario.hpp"

#include <algorithm>

namespace edera {
namespace {

ZoneSpec small_spec(std::uint64_t memory_mib, std::uint32_t vcpus) {
  ZoneSpec spec;
  spec.kernel_image = "scenario/kernel";
  spec.memory_mib = memory_mib;
  spec.vcpus = vcpus;
  return spec;
}

}  // namespace

std::string ScenarioReport::violated() const {
  for (const ScenarioCheck& check : checks) {
    if (!check.passed) return check.description;
  }
  return {};
}

std::string ScenarioReport::render() const {
  std::string out = "scenario " + name + ": " + (passed ? "PASS" : "FAIL") + "\n";
  for (const ScenarioCheck& check : checks) {
    out += std::string(check.passed ? "  [ok]   " : "  [FAIL] ") + check.description + "\n";
  }
  return out;
}

void ScenarioRunner::step() {
  clock_->advance(quantum_ms_);
  daemon_->pump(clock_->now_ms());
  (void)daemon_->supervise(clock_->now_ms());
}

template <typename Predicate>
bool ScenarioRunner::pump_until(Predicate&& done, std::uint64_t max_wait_ms) {
  const std::uint64_t deadline = clock_->now_ms() + max_wait_ms;
  while (!done()) {
    if (clock_->now_ms() > deadline) return false;
    step();
  }
  return true;
}

Result<ZoneRecord> ScenarioRunner::create_active_zone(std::uint64_t memory_mib,
                                                      std::uint32_t vcpus) {
  auto created = daemon_->create_zone(small_spec(memory_mib, vcpus), /*warm=*/false);
  if (!created.is_ok()) return created.error();
  const ZoneId id = created.value().id;
  const std::uint64_t budget = daemon_->config().boot_delay_ms +
                               4ull * daemon_->config().heartbeat_interval_ms + 1000;
  const bool active = pump_until(
      [&] {
        auto record = daemon_->zone(id);
        return record.is_ok() && record.value().state == ZoneState::kActive;
      },
      budget);
  if (!active) {
    (void)daemon_->destroy_zone(id);
    return Error(Errc::kScenarioFailed, "zone never reached Active");
  }
  return daemon_->zone(id);
}

Result<ScenarioReport> ScenarioRunner::run(std::string_view name) {
  if (name == "pagetable-write") return pagetable_write();
  if (name == "fd-namespace") return fd_namespace();
  if (name == "driver-fault") return driver_fault();
  return Error(Errc::kInvalidArgument, "unknown scenario \"" + std::string(name) + "\"");
}

Result<std::vector<ScenarioReport>> ScenarioRunner::run_all() {
  std::vector<ScenarioReport> reports;
  for (std::string_view name : kScenarioNames) {
    auto report = run(name);
    if (!report.is_ok()) return report.error();
    reports.push_back(report.take());
  }
  return reports;
}

// A compromised workload writes to its own page tables (the pagetable-
// escape class). Expected: the write faults, the resource ledger is
// bit-identical, and the zone keeps running for monitoring.
ScenarioReport ScenarioRunner::pagetable_write() {
  ScenarioReport report;
  report.name = "pagetable-write";

  auto zone = create_active_zone(64, 1);
  if (!zone.is_ok()) {
    report.checks.push_back({"zone boots to Active", false});
    report.passed = false;
    return report;
  }
  const ZoneId id = zone.value().id;
  const int domain = *zone.value().domain_id;
  Hypervisor& hv = daemon_->hypervisor();

  // Any page the domain owns will do as the attack target.
  std::uint64_t page = 0;
  for (const auto& [p, owner] : hv.ledger().pt_entries) {
    if (owner == domain) {
      page = p;
      break;
    }
  }

  const std::uint64_t fingerprint_before = hv.ledger_fingerprint();
  const std::size_t events_before = hv.isolation_events().size();

  auto attempt = hv.guest_write_pagetable(domain, page);
  report.checks.push_back({"guest pagetable write faults with PermissionFault",
                           !attempt.is_ok() && attempt.code() == Errc::kPermissionFault});
  report.checks.push_back(
      {"resource ledger fingerprint unchanged", hv.ledger_fingerprint() == fingerprint_before});
  report.checks.push_back({"violation recorded as a monitorable event",
                           hv.isolation_events().size() == events_before + 1});
  auto after = daemon_->zone(id);
  report.checks.push_back({"attacking zone still Active (contained, not crashed)",
                           after.is_ok() && after.value().state == ZoneState::kActive});

  (void)daemon_->destroy_zone(id);
  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const ScenarioCheck& c) { return c.passed; });
  return report;
}

// A workload leaks its control handle (the fd-passing escape class). The
// handle is prefix-fenced, so even with it in hand the zone cannot touch
// another zone's records.
ScenarioReport ScenarioRunner::fd_namespace() {
  ScenarioReport report;
  report.name = "fd-namespace";

  auto a = create_active_zone(64, 1);
  auto b = create_active_zone(64, 1);
  if (!a.is_ok() || !b.is_ok()) {
    report.checks.push_back({"two zones boot to Active", false});
    if (a.is_ok()) (void)daemon_->destroy_zone(a.value().id);
    if (b.is_ok()) (void)daemon_->destroy_zone(b.value().id);
    report.passed = false;
    return report;
  }
  const std::string key_a = "zone/" + a.value().id.to_string();
  const std::string key_b = "zone/" + b.value().id.to_string();
  const std::string b_before = daemon_->kv_get(key_b).is_ok()
                                   ? daemon_->kv_get(key_b).value()
                                   : std::string();

  ScopedStoreHandle handle = daemon_->zone_store_handle(a.value().id);
  report.checks.push_back({"zone reads its own record through the handle",
                           handle.get(key_a).is_ok()});
  auto foreign_read = handle.get(key_b);
  report.checks.push_back({"cross-zone read denied with AccessDenied",
                           !foreign_read.is_ok() && foreign_read.code() == Errc::kAccessDenied});
  auto foreign_write = handle.put(key_b, "intruder");
  report.checks.push_back(
      {"cross-zone write denied with AccessDenied",
       !foreign_write.is_ok() && foreign_write.code() == Errc::kAccessDenied});
  auto broad_list = handle.list("zone/");
  report.checks.push_back({"store-wide listing denied with AccessDenied",
                           !broad_list.is_ok() && broad_list.code() == Errc::kAccessDenied});
  auto b_after = daemon_->kv_get(key_b);
  report.checks.push_back({"victim record bytes unchanged",
                           b_after.is_ok() && b_after.value() == b_before});

  (void)daemon_->destroy_zone(a.value().id);
  (void)daemon_->destroy_zone(b.value().id);
  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const ScenarioCheck& c) { return c.passed; });
  return report;
}

// A device driver crashes (the driver-exploit escape class). Expected: the
// dedicated driver zone dies alone; app zones, the hypervisor, and the
// daemon keep running, and re-attaching restores service.
ScenarioReport ScenarioRunner::driver_fault() {
  ScenarioReport report;
  report.name = "driver-fault";

  std::vector<ZoneId> apps;
  for (int i = 0; i < 3; ++i) {
    auto zone = create_active_zone(64, 1);
    if (!zone.is_ok()) {
      report.checks.push_back({"three app zones boot to Active", false});
      for (const ZoneId& id : apps) (void)daemon_->destroy_zone(id);
      report.passed = false;
      return report;
    }
    apps.push_back(zone.value().id);
  }

  auto attached = daemon_->attach_device("gpu0", AttachMode::kPartitioned, small_spec(64, 1),
                                         /*slice_count=*/2);
  bool device_ready = attached.is_ok();
  ZoneId driver_before;
  if (device_ready) {
    driver_before = attached.value().driver_zone;
    device_ready = pump_until(
        [&] {
          auto record = daemon_->zone(driver_before);
          return record.is_ok() && record.value().state == ZoneState::kActive;
        },
        daemon_->config().boot_delay_ms + 4ull * daemon_->config().heartbeat_interval_ms +
            1000);
  }
  if (device_ready) device_ready = daemon_->bind_slice("gpu0", 0, apps[0]).is_ok();
  report.checks.push_back({"device attached with a live driver zone", device_ready});
  if (!device_ready) {
    for (const ZoneId& id : apps) (void)daemon_->destroy_zone(id);
    report.passed = false;
    return report;
  }

  // Prove the device works, then leave one request in flight.
  auto write = daemon_->device_write(apps[0], "gpu0", 0, 0, {0xAA, 0xBB});
  bool io_ok = write.is_ok();
  if (io_ok) {
    io_ok = pump_until(
        [&] {
          auto polled = daemon_->device_poll(write.value());
          return polled.is_ok() && polled.value().has_value();
        },
        2000);
  }
  report.checks.push_back({"device I/O works before the fault", io_ok});
  auto inflight = daemon_->device_read(apps[0], "gpu0", 0, 0, 2);
  report.checks.push_back({"request submitted and left pending", inflight.is_ok()});

  auto fault = daemon_->inject_driver_fault("gpu0");
  report.checks.push_back({"fault injection reports the driver zone",
                           fault.is_ok() && fault.value().driver_zone == driver_before});

  if (inflight.is_ok()) {
    auto polled = daemon_->device_poll(inflight.value());
    report.checks.push_back({"pending request fails with DriverUnavailable",
                             !polled.is_ok() && polled.code() == Errc::kDriverUnavailable});
  }
  auto refused = daemon_->device_read(apps[0], "gpu0", 0, 0, 2);
  report.checks.push_back({"new requests refused with DriverUnavailable",
                           !refused.is_ok() && refused.code() == Errc::kDriverUnavailable});

  const bool driver_gone = pump_until(
      [&] {
        auto record = daemon_->zone(driver_before);
        return record.is_ok() && record.value().state == ZoneState::kDeprovisioned;
      },
      2ull * daemon_->config().heartbeat_timeout_ms + 1000);
  report.checks.push_back({"driver zone deprovisioned by supervision", driver_gone});

  bool apps_intact = true;
  for (const ZoneId& id : apps) {
    auto record = daemon_->zone(id);
    apps_intact = apps_intact && record.is_ok() && record.value().state == ZoneState::kActive;
  }
  report.checks.push_back({"all app zones still Active", apps_intact});
  report.checks.push_back({"hypervisor root domain intact",
                           daemon_->hypervisor().domain_exists(kRootDomainId)});

  // Recovery: a fresh driver zone takes over the same device.
  auto reattached = daemon_->attach_device("gpu0", AttachMode::kPartitioned,
                                           small_spec(64, 1), /*slice_count=*/2);
  bool recovered = reattached.is_ok() && reattached.value().driver_zone != driver_before;
  if (recovered) {
    const ZoneId driver_after = reattached.value().driver_zone;
    recovered = pump_until(
        [&] {
          auto record = daemon_->zone(driver_after);
          return record.is_ok() && record.value().state == ZoneState::kActive;
        },
        daemon_->config().boot_delay_ms + 4ull * daemon_->config().heartbeat_interval_ms +
            1000);
  }
  if (recovered) {
    auto read = daemon_->device_read(apps[0], "gpu0", 0, 0, 2);
    recovered = read.is_ok() && pump_until(
                                    [&] {
                                      auto polled = daemon_->device_poll(read.value());
                                      return polled.is_ok() && polled.value().has_value();
                                    },
                                    2000);
  }
  report.checks.push_back({"re-attach restores device service", recovered});

  for (const ZoneId& id : apps) (void)daemon_->destroy_zone(id);
  (void)daemon_->destroy_zone(daemon_->device("gpu0").is_ok()
                                  ? daemon_->device("gpu0").value().driver_zone
                                  : ZoneId());
  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const ScenarioCheck& c) { return c.passed; });
  return report;
}

}  // namespace edera
