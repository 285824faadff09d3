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

#ifndef EDERA_ZONE_HPP_
#define EDERA_ZONE_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "edera/common.hpp"

namespace edera {

// 128-bit zone identity, rendered as a lowercase hyphenated uuid.
// Identifiers are never reused; a destroyed zone leaves a tombstone record.
class ZoneId {
 public:
  ZoneId() = default;  // nil id, never assigned to a zone

  static ZoneId from_bytes(const std::array<std::uint8_t, 16>& bytes);
  // Accepts only the canonical 8-4-4-4-12 lowercase form.
  static std::optional<ZoneId> parse(std::string_view text);

  std::string to_string() const;
  bool is_nil() const;
  const std::array<std::uint8_t, 16>& bytes() const { return bytes_; }

  auto operator<=>(const ZoneId&) const = default;

 private:
  std::array<std::uint8_t, 16> bytes_{};
};

// Identity source. Injected so tests can pin the exact sequence of ids.
class UuidGenerator {
 public:
  virtual ~UuidGenerator() = default;
  virtual ZoneId next() = 0;
};

// Version-4 ids from a deterministic engine. Same seed, same id sequence.
class SeededUuidGenerator : public UuidGenerator {
 public:
  explicit SeededUuidGenerator(std::uint64_t seed) : rng_(seed) {}
  ZoneId next() override;

 private:
  std::mt19937_64 rng_;
};

// Process-global randomly seeded id. Production path.
ZoneId new_zone_id();

enum class ZoneRole : std::uint8_t {
  kWorkload,
  kDriver,
  kRoot,
};

struct ZoneSpec {
  std::string kernel_image;
  std::uint64_t memory_mib = 0;
  std::uint32_t vcpus = 0;
  ZoneRole role = ZoneRole::kWorkload;
};

enum class ZoneState : std::uint8_t {
  kProvisioning,
  kWarm,
  kActive,
  kQuarantined,
  kNotResponding,
  kDeprovisioned,
};

enum class LifecycleEvent : std::uint8_t {
  kBootCompleteWarm,
  kBootCompleteActive,
  kActivate,
  kQuarantine,
  kRelease,
  kHeartbeatTimeout,
  kDeprovision,
};

inline constexpr std::array<ZoneState, 6> kAllZoneStates = {
    ZoneState::kProvisioning, ZoneState::kWarm,          ZoneState::kActive,
    ZoneState::kQuarantined,  ZoneState::kNotResponding, ZoneState::kDeprovisioned,
};

inline constexpr std::array<LifecycleEvent, 7> kAllLifecycleEvents = {
    LifecycleEvent::kBootCompleteWarm, LifecycleEvent::kBootCompleteActive,
    LifecycleEvent::kActivate,         LifecycleEvent::kQuarantine,
    LifecycleEvent::kRelease,          LifecycleEvent::kHeartbeatTimeout,
    LifecycleEvent::kDeprovision,
};

// Single authority for lifecycle legality. Every state change anywhere in the
// system goes through this function; kDeprovisioned is terminal.
Result<ZoneState> transition(ZoneState current, LifecycleEvent event);

std::string_view to_string(ZoneState state);
std::string_view to_string(LifecycleEvent event);
std::string_view to_string(ZoneRole role);
// Lowercase snake_case, used for metric labels.
std::string_view to_label(ZoneState state);

std::optional<ZoneState> zone_state_from_string(std::string_view name);
std::optional<ZoneRole> zone_role_from_string(std::string_view name);

struct ContainerSpec {
  std::string name;
  std::string image;
  std::map<std::string, std::string> env;

  bool operator==(const ContainerSpec&) const = default;
};

// Pod identity a zone is serving. One pod maps to exactly one zone.
struct WorkloadBinding {
  std::string pod_namespace;
  std::string pod_name;
  std::vector<ContainerSpec> containers;

  bool operator==(const WorkloadBinding&) const = default;
};

// Durable view of one zone. This is exactly what the daemon persists; the
// runtime objects (domain, channel, agent) are rebuilt around it.
struct ZoneRecord {
  ZoneId id;
  ZoneSpec spec;
  ZoneState state = ZoneState::kProvisioning;
  std::optional<int> domain_id;
  std::set<std::uint32_t> granted_cpus;
  std::uint64_t granted_pages = 0;
  std::optional<std::uint64_t> last_heartbeat_ms;
  std::optional<WorkloadBinding> workload;
};

std::string to_json(const ZoneRecord& record);
Result<ZoneRecord> zone_record_from_json(std::string_view json_text);

}  // namespace edera

#endif  // EDERA_ZONE_HPP_
