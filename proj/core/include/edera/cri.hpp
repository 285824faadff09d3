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

#ifndef EDERA_CRI_HPP_
#define EDERA_CRI_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edera/common.hpp"
#include "edera/daemon.hpp"
#include "edera/zone.hpp"

namespace edera {

inline constexpr std::string_view kManagedRuntimeClass = "edera";
inline constexpr std::string_view kKernelAnnotation = "dev.edera/kernel";
inline constexpr std::string_view kMemoryAnnotation = "dev.edera/memory";
inline constexpr std::string_view kDefaultKernelImage = "ghcr.io/edera-dev/linux-kernel:latest";
inline constexpr std::uint64_t kDefaultPodMemoryMib = 512;
inline constexpr std::uint32_t kDefaultPodVcpus = 1;
inline constexpr std::uint64_t kReconcilePeriodMs = 1000;

// What one pod manifest asks for, after annotation extraction and defaults.
struct PodDesiredState {
  std::string name;
  std::string pod_namespace = "default";
  std::string kernel_image = std::string(kDefaultKernelImage);
  std::uint64_t memory_mib = kDefaultPodMemoryMib;
  std::uint32_t vcpus = kDefaultPodVcpus;
  std::string runtime_class;
  std::vector<ContainerSpec> containers;

  bool managed() const { return runtime_class == kManagedRuntimeClass; }
  std::pair<std::string, std::string> key() const { return {pod_namespace, name}; }

  bool operator==(const PodDesiredState&) const = default;
};

// Parses a single pod document (kind: Pod). Pods with a foreign runtime
// class parse fine and come back tagged unmanaged.
Result<PodDesiredState> parse_manifest(std::string_view document);
// Multi-document form ("---" separated), in document order.
Result<std::vector<PodDesiredState>> parse_manifests(std::string_view text);

struct ReconcileDiff {
  std::vector<PodDesiredState> to_create;
  std::vector<ZoneId> to_destroy;
  std::size_t unchanged = 0;
  // Items that failed to actuate this round; they stay desired and reappear
  // in the next diff.
  std::vector<std::string> failures;
};

struct PodBinding {
  std::string pod_namespace;
  std::string pod_name;
  ZoneId zone;
  ZoneState state = ZoneState::kProvisioning;
};

// The daemon surface the shim needs: narrow, so a remote client (or a test
// double that refuses service) can stand in for the in-process daemon.
class PodZoneBackend {
 public:
  virtual ~PodZoneBackend() = default;
  virtual Result<ZoneRecord> create_pod_zone(const ZoneSpec& spec,
                                             const WorkloadBinding& pod) = 0;
  virtual Status destroy_pod_zone(const ZoneId& id) = 0;
  // Every zone carrying a workload binding, tombstones included.
  virtual Result<std::vector<ZoneRecord>> pod_zones() = 0;
};

class DaemonBackend final : public PodZoneBackend {
 public:
  explicit DaemonBackend(ZoneDaemon& daemon) : daemon_(&daemon) {}

  Result<ZoneRecord> create_pod_zone(const ZoneSpec& spec,
                                     const WorkloadBinding& pod) override;
  Status destroy_pod_zone(const ZoneId& id) override;
  Result<std::vector<ZoneRecord>> pod_zones() override;

 private:
  ZoneDaemon* daemon_;
};

// protect-cri: converts pod intents into zone requests. apply/delete_pod
// only edit the desired store; reconcile is the sole actuator, so intent
// and actuation stay observable as separate steps.
class CriShim {
 public:
  explicit CriShim(PodZoneBackend& backend) : backend_(&backend) {}

  Status apply(const PodDesiredState& pod);
  Status delete_pod(const std::string& pod_namespace, const std::string& name);

  // Diffs desired pods against the daemon's zone bindings and actuates the
  // diff. Individual failures do not abort the rest of the round.
  Result<ReconcileDiff> reconcile();
  Result<std::vector<PodBinding>> list_bindings() const;

  // Periodic trigger: runs reconcile when the period elapsed.
  std::optional<ReconcileDiff> tick(std::uint64_t now_ms);

  const std::map<std::pair<std::string, std::string>, PodDesiredState>& desired() const {
    return desired_;
  }

 private:
  PodZoneBackend* backend_;
  std::map<std::pair<std::string, std::string>, PodDesiredState> desired_;
  std::uint64_t next_reconcile_ms_ = 0;
};

}  // namespace edera

#endif  // EDERA_CRI_HPP_
