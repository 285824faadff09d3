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

#ifndef EDERA_DAEMON_HPP_
#define EDERA_DAEMON_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edera/agent.hpp"
#include "edera/common.hpp"
#include "edera/hypervisor.hpp"
#include "edera/idm.hpp"
#include "edera/net_proxy.hpp"
#include "edera/store.hpp"
#include "edera/zone.hpp"

namespace edera {

inline constexpr std::uint32_t kDefaultHeartbeatTimeoutMs = 1500;
inline constexpr std::uint32_t kDefaultBootDelayMs = 2000;
inline constexpr std::size_t kDeviceSliceBytes = 4096;

struct DaemonConfig {
  std::string store_path;
  HostConfig host;
  std::uint32_t heartbeat_interval_ms = kDefaultHeartbeatIntervalMs;
  // Must be at least twice the interval; default is three missed beats.
  std::uint32_t heartbeat_timeout_ms = kDefaultHeartbeatTimeoutMs;
  // Simulated guest boot: the init agent starts this long after create.
  std::uint32_t boot_delay_ms = kDefaultBootDelayMs;
};

struct StateChange {
  ZoneId zone;
  ZoneState from;
  ZoneState to;
};

struct ExecResult {
  bool done = false;
  std::uint32_t exit_code = 0;
  std::vector<std::uint8_t> stdout_bytes;
  std::vector<std::uint8_t> stderr_bytes;
};

enum class AttachMode : std::uint8_t { kPassthrough, kPartitioned };

std::string_view to_string(AttachMode mode);
std::optional<AttachMode> attach_mode_from_string(std::string_view name);

struct DeviceSliceView {
  std::uint32_t index = 0;
  std::optional<ZoneId> client;
};

struct DeviceView {
  std::string device_id;
  AttachMode mode = AttachMode::kPassthrough;
  ZoneId driver_zone;
  bool driver_live = false;
  std::vector<DeviceSliceView> slices;
};

enum class DeviceOp : std::uint8_t { kRead = 1, kWrite = 2 };

struct DeviceIoResult {
  std::vector<std::uint8_t> data;  // read results; empty for writes
};

struct FaultReport {
  ZoneId driver_zone;
  std::size_t failed_requests = 0;
};

// Zone-origin telemetry. Entries from Event/Log frames are untrusted: stored
// for operators, never parsed for control decisions.
struct MonitorLogEntry {
  ZoneId zone;
  bool untrusted = true;
  std::string detail;
  std::uint64_t at_ms = 0;
};

// protect-daemon: the virtual machine monitor for zones. Owns the simulated
// hypervisor, the durable store, every IDM channel, heartbeat supervision,
// and driver-zone devices. All mutations are serialized by the caller (one
// command loop); that is the concurrency contract of every method here.
class ZoneDaemon final : public ZoneDirectory {
 public:
  // Opens the store and replays it. Zone records found live are adopted as
  // Deprovisioned: simulator domains do not survive the process, so a
  // restart is a host restart.
  static Result<ZoneDaemon> open(DaemonConfig config,
                                 std::unique_ptr<UuidGenerator> ids = nullptr);

  // Lifecycle. On first heartbeat a Provisioning zone becomes Warm or
  // Active, per the warm flag it was created with.
  Result<ZoneRecord> create_zone(const ZoneSpec& spec, bool warm,
                                 std::optional<WorkloadBinding> workload = std::nullopt);
  // Warm to Active with fresh grants: `cpus` schedulable vcpus and grown
  // memory. Validated up front so a failed grant leaves no trace.
  Result<ZoneRecord> activate_zone(const ZoneId& id, std::uint32_t cpus,
                                   std::uint64_t memory_mib);
  Result<ZoneRecord> quarantine_zone(const ZoneId& id);
  Result<ZoneRecord> release_zone(const ZoneId& id);
  Status destroy_zone(const ZoneId& id);

  // Marks overdue Active/Quarantined zones NotResponding, then deprovisions
  // every NotResponding zone. Warm zones are exempt (they may be paused and
  // resource-free). Idempotent at a fixed timestamp.
  std::vector<StateChange> supervise(std::uint64_t now_ms);

  // Advances the simulation: starts agents whose boot delay elapsed, ticks
  // them, and drains every channel into the daemon's handlers.
  void pump(std::uint64_t now_ms);

  Result<ZoneRecord> zone(const ZoneId& id) const;
  std::vector<ZoneRecord> list_zones() const;
  std::map<ZoneState, std::uint64_t> zone_counts() const;

  // Command execution inside a zone (the kubectl-exec path).
  Result<std::uint32_t> exec_in_zone(const ZoneId& id, const std::vector<std::string>& argv,
                                     const std::vector<std::uint8_t>& stdin_bytes = {});
  Result<ExecResult> exec_result(std::uint32_t stream_id) const;

  // Driver-isolation devices. attach creates a dedicated driver zone;
  // re-attach after a fault replaces the driver zone and keeps bindings.
  Result<DeviceView> attach_device(const std::string& device_id, AttachMode mode,
                                   const ZoneSpec& driver_spec, std::uint32_t slice_count = 1);
  Status bind_slice(const std::string& device_id, std::uint32_t slice, const ZoneId& client);
  // Slice memory is zeroed before the slice can be bound again.
  Status unbind_slice(const std::string& device_id, std::uint32_t slice);
  Result<std::uint32_t> device_write(const ZoneId& client, const std::string& device_id,
                                     std::uint32_t slice, std::uint32_t offset,
                                     std::vector<std::uint8_t> data);
  Result<std::uint32_t> device_read(const ZoneId& client, const std::string& device_id,
                                    std::uint32_t slice, std::uint32_t offset,
                                    std::uint32_t length);
  // Ok(nullopt) while the driver has not replied yet.
  Result<std::optional<DeviceIoResult>> device_poll(std::uint32_t request_id) const;
  Result<FaultReport> inject_driver_fault(const std::string& device_id);
  Result<DeviceView> device(const std::string& device_id) const;
  std::vector<DeviceView> list_devices() const;

  // Embedded store surface.
  Status kv_put(std::string_view key, std::string_view value);
  Result<std::string> kv_get(std::string_view key) const;
  std::vector<std::string> kv_list(std::string_view prefix) const;
  // Store access fenced to "zone/<uuid>", for handing into a zone.
  ScopedStoreHandle zone_store_handle(const ZoneId& id);

  // ZoneDirectory (consulted by the net proxy on every packet).
  std::optional<ZoneState> zone_state(const ZoneId& id) const override;

  Hypervisor& hypervisor() { return hv_; }
  const Hypervisor& hypervisor() const { return hv_; }
  const DaemonConfig& config() const { return config_; }
  const std::vector<MonitorLogEntry>& monitor_log() const { return monitor_log_; }
  std::uint64_t now_ms() const { return now_ms_; }
  std::uint64_t zones_created() const { return zones_created_; }
  std::uint64_t zones_destroyed() const { return zones_destroyed_; }

 private:
  struct ZoneRuntime {
    InitAgent agent;
    idm::Endpoint daemon_endpoint;
    std::uint64_t boot_due_ms = 0;
    bool agent_started = false;
    bool warm = false;
  };

  struct DeviceAttachment {
    std::string device_id;
    AttachMode mode = AttachMode::kPassthrough;
    ZoneId driver_zone;
    bool faulted = false;
    std::vector<std::optional<ZoneId>> bindings;
    std::vector<std::vector<std::uint8_t>> slice_memory;
  };

  struct PendingDeviceOp {
    enum class State : std::uint8_t { kPending, kDone, kFailed };
    std::string device_id;
    std::uint32_t slice = 0;
    DeviceOp op = DeviceOp::kRead;
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
    std::vector<std::uint8_t> data;
    State state = State::kPending;
    std::vector<std::uint8_t> result;
  };

  struct ExecTracking {
    ZoneId zone;
    ExecResult result;
  };

  ZoneDaemon(DaemonConfig config, Hypervisor hv, ZoneStore store,
             std::unique_ptr<UuidGenerator> ids);

  Status persist(const ZoneRecord& record);
  Status apply_transition(ZoneRecord& record, LifecycleEvent event);
  void handle_frame(const ZoneId& zone, const idm::Frame& frame);
  void handle_device_reply(const idm::Frame& frame);
  Status submit_device_op(const ZoneId& client, const std::string& device_id,
                          std::uint32_t slice, PendingDeviceOp op);
  // Tears down runtime state and persists the tombstone.
  Status deprovision_locked(ZoneRecord& record);
  // Fails pending ops for a device, or only those on one slice.
  std::size_t fail_pending_ops(const std::string& device_id,
                               std::optional<std::uint32_t> slice);
  DeviceView view_of(const DeviceAttachment& attachment) const;
  bool driver_live(const DeviceAttachment& attachment) const;

  DaemonConfig config_;
  Hypervisor hv_;
  ZoneStore store_;
  std::unique_ptr<UuidGenerator> ids_;
  std::map<ZoneId, ZoneRecord> records_;
  std::map<ZoneId, ZoneRuntime> runtimes_;
  std::map<std::string, DeviceAttachment> devices_;
  std::map<std::uint32_t, PendingDeviceOp> device_ops_;
  std::map<std::uint32_t, ExecTracking> execs_;
  std::vector<MonitorLogEntry> monitor_log_;
  std::uint64_t now_ms_ = 0;
  std::uint32_t next_stream_id_ = 1;
  std::uint32_t last_submitted_stream_ = 0;
  std::uint64_t zones_created_ = 0;
  std::uint64_t zones_destroyed_ = 0;
};

}  // namespace edera

#endif  // EDERA_DAEMON_HPP_
