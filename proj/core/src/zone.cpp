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

#include "edera/zone.hpp"

#include <mutex>

#include <nlohmann/json.hpp>

namespace edera {
namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

ZoneId ZoneId::from_bytes(const std::array<std::uint8_t, 16>& bytes) {
  ZoneId id;
  id.bytes_ = bytes;
  return id;
}

std::optional<ZoneId> ZoneId::parse(std::string_view text) {
  if (text.size() != 36) return std::nullopt;
  std::array<std::uint8_t, 16> bytes{};
  std::size_t out = 0;
  for (std::size_t i = 0; i < text.size();) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (text[i] != '-') return std::nullopt;
      ++i;
      continue;
    }
    const int hi = hex_value(text[i]);
    const int lo = hex_value(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    bytes[out++] = static_cast<std::uint8_t>((hi << 4) | lo);
    i += 2;
  }
  return from_bytes(bytes);
}

std::string ZoneId::to_string() const {
  std::string out;
  out.reserve(36);
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
    out.push_back(kHexDigits[bytes_[i] >> 4]);
    out.push_back(kHexDigits[bytes_[i] & 0x0F]);
  }
  return out;
}

bool ZoneId::is_nil() const {
  for (auto b : bytes_) {
    if (b != 0) return false;
  }
  return true;
}

ZoneId SeededUuidGenerator::next() {
  // Two engine draws fill the 16 bytes big-endian, then the version and
  // variant bits are stamped (version 4, variant 10).
  const std::uint64_t hi = rng_();
  const std::uint64_t lo = rng_();
  std::array<std::uint8_t, 16> bytes{};
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    bytes[8 + i] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
  }
  bytes[6] = static_cast<std::uint8_t>((bytes[6] & 0x0F) | 0x40);
  bytes[8] = static_cast<std::uint8_t>((bytes[8] & 0x3F) | 0x80);
  return ZoneId::from_bytes(bytes);
}

ZoneId new_zone_id() {
  static std::mutex mu;
  static SeededUuidGenerator generator(std::random_device{}());
  std::lock_guard<std::mutex> lock(mu);
  return generator.next();
}

namespace {

std::optional<ZoneState> apply(ZoneState current, LifecycleEvent event) {
  switch (current) {
    case ZoneState::kProvisioning:
      switch (event) {
        case LifecycleEvent::kBootCompleteWarm:
          return ZoneState::kWarm;
        case LifecycleEvent::kBootCompleteActive:
          return ZoneState::kActive;
        case LifecycleEvent::kDeprovision:
          return ZoneState::kDeprovisioned;
        default:
          return std::nullopt;
      }
    case ZoneState::kWarm:
      switch (event) {
        case LifecycleEvent::kActivate:
          return ZoneState::kActive;
        case LifecycleEvent::kDeprovision:
          return ZoneState::kDeprovisioned;
        default:
          return std::nullopt;
      }
    case ZoneState::kActive:
      switch (event) {
        case LifecycleEvent::kQuarantine:
          return ZoneState::kQuarantined;
        case LifecycleEvent::kHeartbeatTimeout:
          return ZoneState::kNotResponding;
        case LifecycleEvent::kDeprovision:
          return ZoneState::kDeprovisioned;
        default:
          return std::nullopt;
      }
    case ZoneState::kQuarantined:
      switch (event) {
        case LifecycleEvent::kRelease:
          return ZoneState::kActive;
        case LifecycleEvent::kHeartbeatTimeout:
          return ZoneState::kNotResponding;
        case LifecycleEvent::kDeprovision:
          return ZoneState::kDeprovisioned;
        default:
          return std::nullopt;
      }
    case ZoneState::kNotResponding:
      switch (event) {
        case LifecycleEvent::kDeprovision:
          return ZoneState::kDeprovisioned;
        default:
          return std::nullopt;
      }
    case ZoneState::kDeprovisioned:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

Result<ZoneState> transition(ZoneState current, LifecycleEvent event) {
  const auto next = apply(current, event);
  if (!next.has_value()) {
    std::string message(to_string(current));
    message += " does not accept ";
    message += to_string(event);
    return Error(Errc::kIllegalTransition, message);
  }
  return *next;
}

std::string_view to_string(ZoneState state) {
  switch (state) {
    case ZoneState::kProvisioning:
      return "Provisioning";
    case ZoneState::kWarm:
      return "Warm";
    case ZoneState::kActive:
      return "Active";
    case ZoneState::kQuarantined:
      return "Quarantined";
    case ZoneState::kNotResponding:
      return "NotResponding";
    case ZoneState::kDeprovisioned:
      return "Deprovisioned";
  }
  return "Unknown";
}

std::string_view to_label(ZoneState state) {
  switch (state) {
    case ZoneState::kProvisioning:
      return "provisioning";
    case ZoneState::kWarm:
      return "warm";
    case ZoneState::kActive:
      return "active";
    case ZoneState::kQuarantined:
      return "quarantined";
    case ZoneState::kNotResponding:
      return "not_responding";
    case ZoneState::kDeprovisioned:
      return "deprovisioned";
  }
  return "unknown";
}

std::string_view to_string(LifecycleEvent event) {
  switch (event) {
    case LifecycleEvent::kBootCompleteWarm:
      return "BootCompleteWarm";
    case LifecycleEvent::kBootCompleteActive:
      return "BootCompleteActive";
    case LifecycleEvent::kActivate:
      return "Activate";
    case LifecycleEvent::kQuarantine:
      return "Quarantine";
    case LifecycleEvent::kRelease:
      return "Release";
    case LifecycleEvent::kHeartbeatTimeout:
      return "HeartbeatTimeout";
    case LifecycleEvent::kDeprovision:
      return "Deprovision";
  }
  return "Unknown";
}

std::string_view to_string(ZoneRole role) {
  switch (role) {
    case ZoneRole::kWorkload:
      return "Workload";
    case ZoneRole::kDriver:
      return "Driver";
    case ZoneRole::kRoot:
      return "Root";
  }
  return "unknown";
}

std::optional<ZoneState> zone_state_from_string(std::string_view name) {
  for (auto state : kAllZoneStates) {
    if (to_string(state) == name) return state;
  }
  return std::nullopt;
}

std::optional<ZoneRole> zone_role_from_string(std::string_view name) {
  for (auto role : {ZoneRole::kWorkload, ZoneRole::kDriver, ZoneRole::kRoot}) {
    if (to_string(role) == name) return role;
  }
  return std::nullopt;
}

std::string to_json(const ZoneRecord& record) {
  nlohmann::json j;
  j["id"] = record.id.to_string();
  j["spec"] = {
      {"kernel_image", record.spec.kernel_image},
      {"memory_mib", record.spec.memory_mib},
      {"vcpus", record.spec.vcpus},
      {"role", std::string(to_string(record.spec.role))},
  };
  j["state"] = std::string(to_string(record.state));
  if (record.domain_id.has_value()) j["domain_id"] = *record.domain_id;
  j["granted_cpus"] = record.granted_cpus;
  j["granted_pages"] = record.granted_pages;
  if (record.last_heartbeat_ms.has_value()) {
    j["last_heartbeat_ms"] = *record.last_heartbeat_ms;
  }
  if (record.workload.has_value()) {
    nlohmann::json containers = nlohmann::json::array();
    for (const auto& c : record.workload->containers) {
      containers.push_back({{"name", c.name}, {"image", c.image}, {"env", c.env}});
    }
    j["workload"] = {
        {"namespace", record.workload->pod_namespace},
        {"name", record.workload->pod_name},
        {"containers", containers},
    };
  }
  return j.dump();
}

Result<ZoneRecord> zone_record_from_json(std::string_view json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return Error(Errc::kInvalidArgument, "zone record is not a json object");
  }
  try {
    ZoneRecord record;
    const auto id = ZoneId::parse(j.at("id").get<std::string>());
    if (!id.has_value()) {
      return Error(Errc::kInvalidArgument, "zone record has a malformed id");
    }
    record.id = *id;
    const auto& spec = j.at("spec");
    record.spec.kernel_image = spec.at("kernel_image").get<std::string>();
    record.spec.memory_mib = spec.at("memory_mib").get<std::uint64_t>();
    record.spec.vcpus = spec.at("vcpus").get<std::uint32_t>();
    const auto role = zone_role_from_string(spec.at("role").get<std::string>());
    if (!role.has_value()) {
      return Error(Errc::kInvalidArgument, "zone record has an unknown role");
    }
    record.spec.role = *role;
    const auto state = zone_state_from_string(j.at("state").get<std::string>());
    if (!state.has_value()) {
      return Error(Errc::kInvalidArgument, "zone record has an unknown state");
    }
    record.state = *state;
    if (j.contains("domain_id")) record.domain_id = j["domain_id"].get<int>();
    for (const auto& cpu : j.at("granted_cpus")) {
      record.granted_cpus.insert(cpu.get<std::uint32_t>());
    }
    record.granted_pages = j.at("granted_pages").get<std::uint64_t>();
    if (j.contains("last_heartbeat_ms")) {
      record.last_heartbeat_ms = j["last_heartbeat_ms"].get<std::uint64_t>();
    }
    if (j.contains("workload")) {
      WorkloadBinding binding;
      const auto& w = j["workload"];
      binding.pod_namespace = w.at("namespace").get<std::string>();
      binding.pod_name = w.at("name").get<std::string>();
      for (const auto& c : w.at("containers")) {
        ContainerSpec container;
        container.name = c.at("name").get<std::string>();
        container.image = c.at("image").get<std::string>();
        if (c.contains("env")) {
          container.env = c["env"].get<std::map<std::string, std::string>>();
        }
        binding.containers.push_back(std::move(container));
      }
      record.workload = std::move(binding);
    }
    return record;
  } catch (const nlohmann::json::exception& e) {
    return Error(Errc::kInvalidArgument, std::string("zone record json: ") + e.what());
  }
}

}  // namespace edera
