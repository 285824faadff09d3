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

#include "edera/daemon.hpp"

#include <algorithm>
#include <random>
#include <utility>

namespace edera {
namespace {

constexpr std::string_view kZoneKeyPrefix = "zone/";

std::string zone_key(const ZoneId& id) {
  return std::string(kZoneKeyPrefix) + id.to_string();
}

std::string_view event_kind_name(std::uint8_t kind) {
  switch (kind) {
    case 1: return "process-start";
    case 2: return "process-exit";
    case 3: return "resource-pressure";
    case 4: return "pagetable-fault";
    case 5: return "custom";
    default: return "event";
  }
}

}  // namespace

std::string_view to_string(AttachMode mode) {
  return mode == AttachMode::kPassthrough ? "passthrough" : "partitioned";
}

std::optional<AttachMode> attach_mode_from_string(std::string_view name) {
  if (name == "passthrough") return AttachMode::kPassthrough;
  if (name == "partitioned") return AttachMode::kPartitioned;
  return std::nullopt;
}

ZoneDaemon::ZoneDaemon(DaemonConfig config, Hypervisor hv, ZoneStore store,
                       std::unique_ptr<UuidGenerator> ids)
    : config_(std::move(config)),
      hv_(std::move(hv)),
      store_(std::move(store)),
      ids_(std::move(ids)) {}

Result<ZoneDaemon> ZoneDaemon::open(DaemonConfig config, std::unique_ptr<UuidGenerator> ids) {
  if (config.heartbeat_interval_ms < kMinHeartbeatIntervalMs) {
    return Error(Errc::kInvalidArgument, "heartbeat interval below minimum");
  }
  if (config.heartbeat_timeout_ms < 2 * config.heartbeat_interval_ms) {
    return Error(Errc::kInvalidArgument,
                 "heartbeat timeout must be at least twice the interval");
  }
  auto hv = Hypervisor::create(config.host);
  if (!hv.is_ok()) return hv.error();
  auto store = ZoneStore::open(config.store_path);
  if (!store.is_ok()) return store.error();
  if (ids == nullptr) {
    std::random_device seed;
    ids = std::make_unique<SeededUuidGenerator>(
        (static_cast<std::uint64_t>(seed()) << 32) ^ seed());
  }
  ZoneDaemon daemon(std::move(config), hv.take(), store.take(), std::move(ids));

  // Replay persisted records. Simulator domains do not outlive the process,
  // so any record still marked live is adopted as Deprovisioned: a daemon
  // restart is a host restart.
  for (const auto& key : daemon.store_.list(kZoneKeyPrefix)) {
    auto value = daemon.store_.get(key);
    if (!value.is_ok()) continue;
    auto record = zone_record_from_json(value.value());
    if (!record.is_ok()) continue;  // unreadable record: leave the bytes be
    ZoneRecord rec = record.take();
    if (rec.state != ZoneState::kDeprovisioned) {
      rec.state = ZoneState::kDeprovisioned;
      rec.domain_id.reset();
      rec.granted_cpus.clear();
      rec.granted_pages = 0;
      if (auto st = daemon.persist(rec); !st.is_ok()) return st.error();
      daemon.monitor_log_.push_back(
          {rec.id, /*untrusted=*/false, "adopted as deprovisioned after restart", 0});
    }
    daemon.records_[rec.id] = std::move(rec);
  }
  return daemon;
}

Status ZoneDaemon::persist(const ZoneRecord& record) {
  return store_.put(zone_key(record.id), to_json(record));
}

Status ZoneDaemon::apply_transition(ZoneRecord& record, LifecycleEvent event) {
  auto next = transition(record.state, event);
  if (!next.is_ok()) return next.status();
  record.state = next.value();
  return Status::ok();
}

Result<ZoneRecord> ZoneDaemon::create_zone(const ZoneSpec& spec, bool warm,
                                           std::optional<WorkloadBinding> workload) {
  ZoneId id = ids_->next();
  for (int attempt = 0; records_.count(id) != 0 && attempt < 16; ++attempt) {
    id = ids_->next();
  }
  if (records_.count(id) != 0) {
    return Error(Errc::kInvalidArgument, "identifier collision persisted across retries");
  }

  auto domain = hv_.create_domain(spec, kDefaultWeight);
  if (!domain.is_ok()) return domain.error();
  const int domain_id = domain.value().domain_id;

  auto [daemon_ep, zone_ep] = idm::make_channel();
  const std::uint64_t boot_due = now_ms_ + config_.boot_delay_ms;
  auto agent = InitAgent::create({config_.heartbeat_interval_ms, id}, std::move(zone_ep),
                                 /*start_ms=*/boot_due);
  if (!agent.is_ok()) {
    (void)hv_.destroy_domain(domain_id);
    return agent.error();
  }

  ZoneRecord record;
  record.id = id;
  record.spec = spec;
  record.state = ZoneState::kProvisioning;
  record.domain_id = domain_id;
  record.granted_pages = hv_.pages_granted(domain_id);
  record.workload = std::move(workload);

  if (auto st = persist(record); !st.is_ok()) {
    (void)hv_.destroy_domain(domain_id);
    return st.error();
  }
  records_[id] = record;
  runtimes_.insert(
      {id, ZoneRuntime{agent.take(), std::move(daemon_ep), boot_due, false, warm}});
  ++zones_created_;
  return record;
}

Result<ZoneRecord> ZoneDaemon::activate_zone(const ZoneId& id, std::uint32_t cpus,
                                             std::uint64_t memory_mib) {
  auto it = records_.find(id);
  if (it == records_.end()) return Error(Errc::kNoSuchZone, "no zone " + id.to_string());
  ZoneRecord& record = it->second;

  // Validate everything before touching the ledger: a failed activation must
  // leave both the record and the hypervisor exactly as they were.
  auto next = transition(record.state, LifecycleEvent::kActivate);
  if (!next.is_ok()) return next.error();
  if (cpus > hv_.host().cpu_count) {
    return Error(Errc::kInsufficientCpus,
                 "need " + std::to_string(cpus) + " vcpus, host has " +
                     std::to_string(hv_.host().cpu_count) + " cpus");
  }
  const std::uint64_t pages = Hypervisor::pages_for_mib(memory_mib, hv_.host().page_size_kib);
  if (pages > hv_.free_pages()) {
    return Error(Errc::kInsufficientMemory, "need " + std::to_string(pages) + " pages, " +
                                                std::to_string(hv_.free_pages()) + " free");
  }

  const int domain_id = *record.domain_id;
  if (memory_mib > 0) {
    auto grown = hv_.grow_memory(domain_id, memory_mib);
    if (!grown.is_ok()) return grown.error();
  }
  if (auto st = hv_.set_vcpus(domain_id, cpus); !st.is_ok()) return st.error();

  record.state = next.value();
  record.spec.vcpus = cpus;
  record.spec.memory_mib += memory_mib;
  record.granted_pages = hv_.pages_granted(domain_id);
  if (auto st = persist(record); !st.is_ok()) return st.error();
  return record;
}

Result<ZoneRecord> ZoneDaemon::quarantine_zone(const ZoneId& id) {
  auto it = records_.find(id);
  if (it == records_.end()) return Error(Errc::kNoSuchZone, "no zone " + id.to_string());
  if (auto st = apply_transition(it->second, LifecycleEvent::kQuarantine); !st.is_ok()) {
    return st.error();
  }
  if (auto st = persist(it->second); !st.is_ok()) return st.error();
  return it->second;
}

Result<ZoneRecord> ZoneDaemon::release_zone(const ZoneId& id) {
  auto it = records_.find(id);
  if (it == records_.end()) return Error(Errc::kNoSuchZone, "no zone " + id.to_string());
  if (auto st = apply_transition(it->second, LifecycleEvent::kRelease); !st.is_ok()) {
    return st.error();
  }
  if (auto st = persist(it->second); !st.is_ok()) return st.error();
  return it->second;
}

Status ZoneDaemon::destroy_zone(const ZoneId& id) {
  auto it = records_.find(id);
  if (it == records_.end() || it->second.state == ZoneState::kDeprovisioned) {
    return Status(Errc::kNoSuchZone, "no zone " + id.to_string());
  }
  return deprovision_locked(it->second);
}

Status ZoneDaemon::deprovision_locked(ZoneRecord& record) {
  // Device fallout first: a dying driver zone fails its device, a dying
  // client zone frees (and wipes) its slices.
  for (auto& [device_id, attachment] : devices_) {
    if (attachment.driver_zone == record.id && !attachment.faulted) {
      attachment.faulted = true;
      (void)fail_pending_ops(device_id, std::nullopt);
    }
    for (std::size_t i = 0; i < attachment.bindings.size(); ++i) {
      if (attachment.bindings[i] == record.id) {
        std::fill(attachment.slice_memory[i].begin(), attachment.slice_memory[i].end(),
                  std::uint8_t{0});
        attachment.bindings[i].reset();
        (void)fail_pending_ops(device_id, static_cast<std::uint32_t>(i));
      }
    }
  }

  auto rt = runtimes_.find(record.id);
  if (rt != runtimes_.end()) {
    rt->second.daemon_endpoint.close();
    runtimes_.erase(rt);
  }
  if (record.domain_id.has_value()) {
    (void)hv_.destroy_domain(*record.domain_id);
  }
  if (auto st = apply_transition(record, LifecycleEvent::kDeprovision); !st.is_ok()) {
    return st;
  }
  record.domain_id.reset();
  record.granted_cpus.clear();
  record.granted_pages = 0;
  ++zones_destroyed_;
  return persist(record);
}

std::vector<StateChange> ZoneDaemon::supervise(std::uint64_t now_ms) {
  now_ms_ = std::max(now_ms_, now_ms);
  std::vector<StateChange> changes;
  for (auto& [id, record] : records_) {
    const bool supervised =
        record.state == ZoneState::kActive || record.state == ZoneState::kQuarantined;
    if (!supervised || !record.last_heartbeat_ms.has_value()) continue;
    if (now_ms_ - *record.last_heartbeat_ms <= config_.heartbeat_timeout_ms) continue;
    const ZoneState from = record.state;
    if (!apply_transition(record, LifecycleEvent::kHeartbeatTimeout).is_ok()) continue;
    (void)persist(record);
    changes.push_back({id, from, record.state});
  }
  // Everything NotResponding — newly marked above or flagged by a fault
  // injection — is deprovisioned in the same sweep.
  for (auto& [id, record] : records_) {
    if (record.state != ZoneState::kNotResponding) continue;
    (void)deprovision_locked(record);
    changes.push_back({id, ZoneState::kNotResponding, record.state});
  }
  return changes;
}

void ZoneDaemon::pump(std::uint64_t now_ms) {
  now_ms_ = std::max(now_ms_, now_ms);
  for (auto& [id, rt] : runtimes_) {
    if (!rt.agent_started && now_ms_ >= rt.boot_due_ms) rt.agent_started = true;
    if (rt.agent_started) (void)rt.agent.tick(now_ms_);
  }
  // Drain after every agent ticked, so one pump moves a full round.
  for (auto& [id, rt] : runtimes_) {
    for (;;) {
      auto got = rt.daemon_endpoint.recv();
      if (!got.is_ok()) break;
      auto frame = got.take();
      if (!frame.has_value()) break;
      handle_frame(id, *frame);
    }
  }
}

void ZoneDaemon::handle_frame(const ZoneId& zone, const idm::Frame& frame) {
  auto rec_it = records_.find(zone);
  if (rec_it == records_.end()) return;
  ZoneRecord& record = rec_it->second;

  switch (frame.type) {
    case idm::MsgType::kHeartbeat: {
      record.last_heartbeat_ms = now_ms_;
      if (record.state == ZoneState::kProvisioning) {
        auto rt = runtimes_.find(zone);
        const bool warm = rt != runtimes_.end() && rt->second.warm;
        const LifecycleEvent event = warm ? LifecycleEvent::kBootCompleteWarm
                                          : LifecycleEvent::kBootCompleteActive;
        if (apply_transition(record, event).is_ok()) (void)persist(record);
      }
      return;
    }
    case idm::MsgType::kEvent: {
      std::uint8_t kind = 0;
      std::string detail;
      std::uint64_t at = now_ms_;
      idm::TlvReader reader(frame.payload);
      for (;;) {
        auto field = reader.next();
        if (!field.is_ok() || !field.value().has_value()) break;
        const idm::TlvField& f = *field.value();
        if (f.tag == idm::tags::kEventKind && f.size == 1) kind = f.value[0];
        if (f.tag == idm::tags::kEventDetail) detail = std::string(f.as_string());
        if (f.tag == idm::tags::kEventAt) {
          if (auto v = idm::tlv_u64(f); v.is_ok()) at = v.value();
        }
      }
      std::string text(event_kind_name(kind));
      if (!detail.empty()) text += ": " + detail;
      monitor_log_.push_back({zone, /*untrusted=*/true, std::move(text), at});
      return;
    }
    case idm::MsgType::kLog: {
      idm::TlvReader reader(frame.payload);
      for (;;) {
        auto field = reader.next();
        if (!field.is_ok() || !field.value().has_value()) break;
        const idm::TlvField& f = *field.value();
        if (f.tag == idm::tags::kLogLine) {
          monitor_log_.push_back(
              {zone, /*untrusted=*/true, std::string(f.as_string()), now_ms_});
        }
      }
      return;
    }
    case idm::MsgType::kExecOutput: {
      auto exec = execs_.find(frame.stream_id);
      if (exec == execs_.end()) return;
      std::uint8_t channel = 0;
      idm::TlvReader reader(frame.payload);
      for (;;) {
        auto field = reader.next();
        if (!field.is_ok() || !field.value().has_value()) break;
        const idm::TlvField& f = *field.value();
        if (f.tag == idm::tags::kOutputChannel && f.size == 1) channel = f.value[0];
        if (f.tag == idm::tags::kOutputData) {
          auto& sink = channel == 2 ? exec->second.result.stderr_bytes
                                    : exec->second.result.stdout_bytes;
          sink.insert(sink.end(), f.value, f.value + f.size);
        }
      }
      return;
    }
    case idm::MsgType::kExitEvent: {
      auto exec = execs_.find(frame.stream_id);
      if (exec == execs_.end()) return;
      idm::TlvReader reader(frame.payload);
      for (;;) {
        auto field = reader.next();
        if (!field.is_ok() || !field.value().has_value()) break;
        const idm::TlvField& f = *field.value();
        if (f.tag == idm::tags::kExitCode) {
          if (auto v = idm::tlv_u32(f); v.is_ok()) exec->second.result.exit_code = v.value();
        }
      }
      exec->second.result.done = true;
      return;
    }
    case idm::MsgType::kDeviceReply:
      handle_device_reply(frame);
      return;
    default:
      // Zones do not command the daemon; note it and move on.
      monitor_log_.push_back({zone, /*untrusted=*/true, "unexpected frame type", now_ms_});
      return;
  }
}

void ZoneDaemon::handle_device_reply(const idm::Frame& frame) {
  auto it = device_ops_.find(frame.stream_id);
  if (it == device_ops_.end()) return;
  PendingDeviceOp& op = it->second;
  if (op.state != PendingDeviceOp::State::kPending) return;

  std::uint8_t status = 1;
  idm::TlvReader reader(frame.payload);
  for (;;) {
    auto field = reader.next();
    if (!field.is_ok() || !field.value().has_value()) break;
    const idm::TlvField& f = *field.value();
    if (f.tag == idm::tags::kReplyStatus && f.size == 1) status = f.value[0];
  }

  auto device = devices_.find(op.device_id);
  if (status != 0 || device == devices_.end() || device->second.faulted ||
      op.slice >= device->second.slice_memory.size()) {
    op.state = PendingDeviceOp::State::kFailed;
    return;
  }
  std::vector<std::uint8_t>& memory = device->second.slice_memory[op.slice];
  if (op.op == DeviceOp::kWrite) {
    if (op.offset + op.data.size() > memory.size()) {
      op.state = PendingDeviceOp::State::kFailed;
      return;
    }
    std::copy(op.data.begin(), op.data.end(), memory.begin() + op.offset);
  } else {
    if (op.offset + op.length > memory.size()) {
      op.state = PendingDeviceOp::State::kFailed;
      return;
    }
    op.result.assign(memory.begin() + op.offset, memory.begin() + op.offset + op.length);
  }
  op.state = PendingDeviceOp::State::kDone;
}

Result<ZoneRecord> ZoneDaemon::zone(const ZoneId& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) return Error(Errc::kNoSuchZone, "no zone " + id.to_string());
  return it->second;
}

std::vector<ZoneRecord> ZoneDaemon::list_zones() const {
  std::vector<ZoneRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, record] : records_) out.push_back(record);
  return out;
}

std::map<ZoneState, std::uint64_t> ZoneDaemon::zone_counts() const {
  std::map<ZoneState, std::uint64_t> counts;
  for (ZoneState state : kAllZoneStates) counts[state] = 0;
  for (const auto& [id, record] : records_) ++counts[record.state];
  return counts;
}

Result<std::uint32_t> ZoneDaemon::exec_in_zone(const ZoneId& id,
                                               const std::vector<std::string>& argv,
                                               const std::vector<std::uint8_t>& stdin_bytes) {
  auto it = records_.find(id);
  if (it == records_.end()) return Error(Errc::kNoSuchZone, "no zone " + id.to_string());
  const ZoneState state = it->second.state;
  if (state != ZoneState::kActive && state != ZoneState::kQuarantined) {
    return Error(Errc::kZoneNotActive,
                 std::string("zone is ") + std::string(to_string(state)));
  }
  if (argv.empty()) return Error(Errc::kInvalidArgument, "argv must be non-empty");
  for (const auto& arg : argv) {
    if (arg.size() > 65535) {
      return Error(Errc::kInvalidArgument, "argument exceeds one tlv value");
    }
  }

  idm::TlvWriter payload;
  for (const auto& arg : argv) payload.add_string(idm::tags::kArgvEntry, arg);
  for (std::size_t offset = 0; offset < stdin_bytes.size(); offset += kExecChunkBytes) {
    const std::size_t len = std::min(kExecChunkBytes, stdin_bytes.size() - offset);
    payload.add(idm::tags::kStdin, stdin_bytes.data() + offset, len);
  }

  auto rt = runtimes_.find(id);
  if (rt == runtimes_.end()) return Error(Errc::kNoSuchZone, "zone runtime missing");
  const std::uint32_t stream = next_stream_id_++;
  idm::Frame frame{idm::MsgType::kExecRequest, stream, payload.take()};
  if (auto st = rt->second.daemon_endpoint.send(frame); !st.is_ok()) return st.error();
  execs_[stream] = ExecTracking{id, {}};
  return stream;
}

Result<ExecResult> ZoneDaemon::exec_result(std::uint32_t stream_id) const {
  auto it = execs_.find(stream_id);
  if (it == execs_.end()) return Error(Errc::kInvalidArgument, "unknown exec stream");
  return it->second.result;
}

bool ZoneDaemon::driver_live(const DeviceAttachment& attachment) const {
  auto it = records_.find(attachment.driver_zone);
  if (it == records_.end()) return false;
  return it->second.state != ZoneState::kDeprovisioned &&
         it->second.state != ZoneState::kNotResponding;
}

DeviceView ZoneDaemon::view_of(const DeviceAttachment& attachment) const {
  DeviceView view;
  view.device_id = attachment.device_id;
  view.mode = attachment.mode;
  view.driver_zone = attachment.driver_zone;
  view.driver_live = !attachment.faulted && driver_live(attachment);
  for (std::size_t i = 0; i < attachment.bindings.size(); ++i) {
    view.slices.push_back({static_cast<std::uint32_t>(i), attachment.bindings[i]});
  }
  return view;
}

Result<DeviceView> ZoneDaemon::attach_device(const std::string& device_id, AttachMode mode,
                                             const ZoneSpec& driver_spec,
                                             std::uint32_t slice_count) {
  if (device_id.empty()) return Error(Errc::kInvalidArgument, "device id must be non-empty");
  if (mode == AttachMode::kPassthrough && slice_count != 1) {
    return Error(Errc::kInvalidArgument, "passthrough exposes exactly one slice");
  }
  if (slice_count == 0) return Error(Errc::kInvalidArgument, "slice count must be positive");

  auto existing = devices_.find(device_id);
  if (existing != devices_.end()) {
    if (!existing->second.faulted && driver_live(existing->second)) {
      return Error(Errc::kDeviceBusy, "device already attached");
    }
    // Re-attach after a fault replaces the driver zone; the device's shape
    // (mode, slice count) and client bindings are preserved.
    if (existing->second.mode != mode ||
        existing->second.bindings.size() != slice_count) {
      return Error(Errc::kInvalidArgument, "device shape is fixed across re-attach");
    }
  }

  ZoneSpec spec = driver_spec;
  spec.role = ZoneRole::kDriver;
  auto driver = create_zone(spec, /*warm=*/false);
  if (!driver.is_ok()) return driver.error();

  if (existing == devices_.end()) {
    DeviceAttachment attachment;
    attachment.device_id = device_id;
    attachment.mode = mode;
    attachment.driver_zone = driver.value().id;
    attachment.bindings.assign(slice_count, std::nullopt);
    attachment.slice_memory.assign(slice_count,
                                   std::vector<std::uint8_t>(kDeviceSliceBytes, 0));
    devices_[device_id] = std::move(attachment);
  } else {
    existing->second.driver_zone = driver.value().id;
    existing->second.faulted = false;
  }
  return view_of(devices_[device_id]);
}

Status ZoneDaemon::bind_slice(const std::string& device_id, std::uint32_t slice,
                              const ZoneId& client) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return Status(Errc::kNoSuchDevice, "no device " + device_id);
  DeviceAttachment& attachment = it->second;
  if (slice >= attachment.bindings.size()) {
    return Status(Errc::kNoSuchSlice, "device has " +
                                          std::to_string(attachment.bindings.size()) +
                                          " slices");
  }
  if (attachment.bindings[slice].has_value()) {
    return Status(Errc::kDeviceBusy, "slice " + std::to_string(slice) + " already bound");
  }
  auto rec = records_.find(client);
  if (rec == records_.end()) return Status(Errc::kNoSuchZone, "no zone " + client.to_string());
  if (rec->second.state != ZoneState::kActive) {
    return Status(Errc::kZoneNotActive,
                  std::string("client zone is ") + std::string(to_string(rec->second.state)));
  }
  attachment.bindings[slice] = client;
  return Status::ok();
}

Status ZoneDaemon::unbind_slice(const std::string& device_id, std::uint32_t slice) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return Status(Errc::kNoSuchDevice, "no device " + device_id);
  DeviceAttachment& attachment = it->second;
  if (slice >= attachment.bindings.size()) {
    return Status(Errc::kNoSuchSlice, "device has " +
                                          std::to_string(attachment.bindings.size()) +
                                          " slices");
  }
  if (!attachment.bindings[slice].has_value()) {
    return Status(Errc::kSliceNotBound, "slice " + std::to_string(slice) + " is not bound");
  }
  // Wipe before the slice can ever be bound again.
  std::fill(attachment.slice_memory[slice].begin(), attachment.slice_memory[slice].end(),
            std::uint8_t{0});
  attachment.bindings[slice].reset();
  (void)fail_pending_ops(device_id, slice);
  return Status::ok();
}

Status ZoneDaemon::submit_device_op(const ZoneId& client, const std::string& device_id,
                                    std::uint32_t slice, PendingDeviceOp op) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return Status(Errc::kNoSuchDevice, "no device " + device_id);
  DeviceAttachment& attachment = it->second;
  if (attachment.faulted) {
    return Status(Errc::kDriverUnavailable, "driver zone faulted; re-attach the device");
  }
  if (slice >= attachment.bindings.size()) {
    return Status(Errc::kNoSuchSlice, "device has " +
                                          std::to_string(attachment.bindings.size()) +
                                          " slices");
  }
  if (!attachment.bindings[slice].has_value()) {
    return Status(Errc::kSliceNotBound, "slice " + std::to_string(slice) + " is not bound");
  }
  if (*attachment.bindings[slice] != client) {
    return Status(Errc::kAccessDenied,
                  "slice " + std::to_string(slice) + " is bound to another zone");
  }
  const std::size_t span =
      op.op == DeviceOp::kWrite ? op.data.size() : static_cast<std::size_t>(op.length);
  if (op.offset + span > kDeviceSliceBytes) {
    return Status(Errc::kInvalidArgument, "slice access out of range");
  }
  if (!driver_live(attachment)) {
    return Status(Errc::kDriverUnavailable, "driver zone is not responding");
  }

  auto rt = runtimes_.find(attachment.driver_zone);
  if (rt == runtimes_.end()) {
    return Status(Errc::kDriverUnavailable, "driver zone runtime missing");
  }
  const std::uint32_t stream = next_stream_id_++;
  idm::TlvWriter payload;
  payload.add_string(idm::tags::kDeviceId, device_id);
  payload.add_u32(idm::tags::kDeviceSlice, slice);
  payload.add_u8(idm::tags::kDeviceOp, static_cast<std::uint8_t>(op.op));
  payload.add_u32(idm::tags::kDeviceOffset, op.offset);
  if (op.op == DeviceOp::kWrite) {
    payload.add(idm::tags::kDeviceData, op.data);
  } else {
    payload.add_u32(idm::tags::kDeviceLen, op.length);
  }
  idm::Frame frame{idm::MsgType::kDeviceRequest, stream, payload.take()};
  if (auto st = rt->second.daemon_endpoint.send(frame); !st.is_ok()) return st;

  op.device_id = device_id;
  op.slice = slice;
  device_ops_[stream] = std::move(op);
  // The caller learns the stream id through the Result wrappers below.
  last_submitted_stream_ = stream;
  return Status::ok();
}

Result<std::uint32_t> ZoneDaemon::device_write(const ZoneId& client,
                                               const std::string& device_id,
                                               std::uint32_t slice, std::uint32_t offset,
                                               std::vector<std::uint8_t> data) {
  PendingDeviceOp op;
  op.op = DeviceOp::kWrite;
  op.offset = offset;
  op.data = std::move(data);
  if (auto st = submit_device_op(client, device_id, slice, std::move(op)); !st.is_ok()) {
    return st.error();
  }
  return last_submitted_stream_;
}

Result<std::uint32_t> ZoneDaemon::device_read(const ZoneId& client,
                                              const std::string& device_id,
                                              std::uint32_t slice, std::uint32_t offset,
                                              std::uint32_t length) {
  PendingDeviceOp op;
  op.op = DeviceOp::kRead;
  op.offset = offset;
  op.length = length;
  if (auto st = submit_device_op(client, device_id, slice, std::move(op)); !st.is_ok()) {
    return st.error();
  }
  return last_submitted_stream_;
}

Result<std::optional<DeviceIoResult>> ZoneDaemon::device_poll(std::uint32_t request_id) const {
  auto it = device_ops_.find(request_id);
  if (it == device_ops_.end()) {
    return Error(Errc::kInvalidArgument, "unknown device request");
  }
  switch (it->second.state) {
    case PendingDeviceOp::State::kPending:
      return std::optional<DeviceIoResult>{};
    case PendingDeviceOp::State::kFailed:
      return Error(Errc::kDriverUnavailable, "request failed: driver unavailable");
    case PendingDeviceOp::State::kDone:
      return std::optional<DeviceIoResult>{DeviceIoResult{it->second.result}};
  }
  return Error(Errc::kInvalidArgument, "corrupt request state");
}

std::size_t ZoneDaemon::fail_pending_ops(const std::string& device_id,
                                         std::optional<std::uint32_t> slice) {
  std::size_t failed = 0;
  for (auto& [stream, op] : device_ops_) {
    if (op.device_id != device_id) continue;
    if (slice.has_value() && op.slice != *slice) continue;
    if (op.state != PendingDeviceOp::State::kPending) continue;
    op.state = PendingDeviceOp::State::kFailed;
    ++failed;
  }
  return failed;
}

Result<FaultReport> ZoneDaemon::inject_driver_fault(const std::string& device_id) {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return Error(Errc::kNoSuchDevice, "no device " + device_id);
  DeviceAttachment& attachment = it->second;

  FaultReport report;
  report.driver_zone = attachment.driver_zone;
  if (attachment.faulted) return report;  // idempotent

  report.failed_requests = fail_pending_ops(device_id, std::nullopt);
  attachment.faulted = true;

  auto rec = records_.find(attachment.driver_zone);
  if (rec == records_.end() || rec->second.state == ZoneState::kDeprovisioned) return report;

  auto rt = runtimes_.find(attachment.driver_zone);
  if (rt != runtimes_.end()) rt->second.agent.disable();

  ZoneRecord& record = rec->second;
  if (record.state == ZoneState::kActive || record.state == ZoneState::kQuarantined) {
    // Crashed driver: mark it down now; supervise deprovisions it.
    if (apply_transition(record, LifecycleEvent::kHeartbeatTimeout).is_ok()) {
      (void)persist(record);
    }
  } else {
    // Fault before the driver ever booted: nothing to monitor, tear it down.
    (void)deprovision_locked(record);
  }
  return report;
}

Result<DeviceView> ZoneDaemon::device(const std::string& device_id) const {
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return Error(Errc::kNoSuchDevice, "no device " + device_id);
  return view_of(it->second);
}

std::vector<DeviceView> ZoneDaemon::list_devices() const {
  std::vector<DeviceView> out;
  out.reserve(devices_.size());
  for (const auto& [id, attachment] : devices_) out.push_back(view_of(attachment));
  return out;
}

Status ZoneDaemon::kv_put(std::string_view key, std::string_view value) {
  return store_.put(key, value);
}

Result<std::string> ZoneDaemon::kv_get(std::string_view key) const {
  return store_.get(key);
}

std::vector<std::string> ZoneDaemon::kv_list(std::string_view prefix) const {
  return store_.list(prefix);
}

ScopedStoreHandle ZoneDaemon::zone_store_handle(const ZoneId& id) {
  return ScopedStoreHandle(store_, zone_key(id));
}

std::optional<ZoneState> ZoneDaemon::zone_state(const ZoneId& id) const {
  auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second.state;
}

}  // namespace edera
