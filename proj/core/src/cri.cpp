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

#include "edera/cri.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <set>

namespace edera {
namespace {

Result<PodDesiredState> pod_from_node(const YAML::Node& doc) {
  if (!doc.IsMap()) return Error(Errc::kMalformedManifest, "document is not a mapping");
  const auto kind = doc["kind"];
  if (!kind || kind.as<std::string>("") != "Pod") {
    return Error(Errc::kMalformedManifest, "kind must be Pod");
  }
  const auto metadata = doc["metadata"];
  if (!metadata || !metadata.IsMap() || !metadata["name"]) {
    return Error(Errc::kMalformedManifest, "metadata.name is required");
  }

  PodDesiredState pod;
  pod.name = metadata["name"].as<std::string>("");
  if (pod.name.empty()) return Error(Errc::kMalformedManifest, "metadata.name is empty");
  if (metadata["namespace"]) pod.pod_namespace = metadata["namespace"].as<std::string>("default");

  if (const auto annotations = metadata["annotations"]; annotations && annotations.IsMap()) {
    if (const auto kernel = annotations[std::string(kKernelAnnotation)]; kernel) {
      pod.kernel_image = kernel.as<std::string>("");
      if (pod.kernel_image.empty()) {
        return Error(Errc::kBadAnnotationValue, "kernel image annotation is empty");
      }
    }
    if (const auto memory = annotations[std::string(kMemoryAnnotation)]; memory) {
      const std::string text = memory.as<std::string>("");
      std::uint64_t value = 0;
      const char* begin = text.data();
      const char* end = begin + text.size();
      auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec != std::errc() || ptr != end || value == 0) {
        return Error(Errc::kBadAnnotationValue,
                     "memory annotation must be a positive integer, got \"" + text + "\"");
      }
      pod.memory_mib = value;
    }
  }

  const auto spec = doc["spec"];
  if (!spec || !spec.IsMap()) return Error(Errc::kMalformedManifest, "spec is required");
  if (const auto runtime = spec["runtimeClassName"]; runtime) {
    pod.runtime_class = runtime.as<std::string>("");
  }

  const auto containers = spec["containers"];
  if (!containers || !containers.IsSequence() || containers.size() == 0) {
    return Error(Errc::kMalformedManifest, "spec.containers must be a non-empty list");
  }
  for (const auto& node : containers) {
    if (!node.IsMap() || !node["name"]) {
      return Error(Errc::kMalformedManifest, "every container needs a name");
    }
    ContainerSpec container;
    container.name = node["name"].as<std::string>("");
    if (node["image"]) container.image = node["image"].as<std::string>("");
    if (const auto env = node["env"]; env) {
      if (env.IsSequence()) {
        for (const auto& entry : env) {
          if (!entry.IsMap() || !entry["name"]) continue;
          container.env[entry["name"].as<std::string>("")] =
              entry["value"] ? entry["value"].as<std::string>("") : "";
        }
      } else if (env.IsMap()) {
        for (const auto& entry : env) {
          container.env[entry.first.as<std::string>("")] = entry.second.as<std::string>("");
        }
      }
    }
    pod.containers.push_back(std::move(container));
  }
  return pod;
}

}  // namespace

Result<PodDesiredState> parse_manifest(std::string_view document) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(document));
  } catch (const YAML::Exception& e) {
    return Error(Errc::kMalformedManifest, e.what());
  }
  return pod_from_node(doc);
}

Result<std::vector<PodDesiredState>> parse_manifests(std::string_view text) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(std::string(text));
  } catch (const YAML::Exception& e) {
    return Error(Errc::kMalformedManifest, e.what());
  }
  std::vector<PodDesiredState> pods;
  for (const auto& doc : docs) {
    if (doc.IsNull()) continue;  // blank document between separators
    auto pod = pod_from_node(doc);
    if (!pod.is_ok()) return pod.error();
    pods.push_back(pod.take());
  }
  if (pods.empty()) return Error(Errc::kMalformedManifest, "no pod documents found");
  return pods;
}

Result<ZoneRecord> DaemonBackend::create_pod_zone(const ZoneSpec& spec,
                                                  const WorkloadBinding& pod) {
  return daemon_->create_zone(spec, /*warm=*/false, pod);
}

Status DaemonBackend::destroy_pod_zone(const ZoneId& id) {
  return daemon_->destroy_zone(id);
}

Result<std::vector<ZoneRecord>> DaemonBackend::pod_zones() {
  std::vector<ZoneRecord> out;
  for (auto& record : daemon_->list_zones()) {
    if (record.workload.has_value()) out.push_back(std::move(record));
  }
  return out;
}

Status CriShim::apply(const PodDesiredState& pod) {
  if (!pod.managed()) {
    return Status(Errc::kUnmanagedPod,
                  "pod " + pod.pod_namespace + "/" + pod.name + " has runtime class \"" +
                      pod.runtime_class + "\"");
  }
  desired_[pod.key()] = pod;  // upsert: applying twice keeps one entry
  return Status::ok();
}

Status CriShim::delete_pod(const std::string& pod_namespace, const std::string& name) {
  desired_.erase({pod_namespace, name});
  return Status::ok();
}

Result<ReconcileDiff> CriShim::reconcile() {
  auto zones = backend_->pod_zones();
  if (!zones.is_ok()) {
    return Error(Errc::kDaemonUnavailable,
                 "diff computed but nothing actuated: " + std::to_string(desired_.size()) +
                     " desired pods unreconciled");
  }

  // Actual state: live zones carrying a pod binding. A tombstoned zone does
  // not count, so a pod whose zone died is re-created.
  std::map<std::pair<std::string, std::string>, ZoneId> actual;
  for (const auto& record : zones.value()) {
    if (record.state == ZoneState::kDeprovisioned) continue;
    actual[{record.workload->pod_namespace, record.workload->pod_name}] = record.id;
  }

  ReconcileDiff diff;
  for (const auto& [key, pod] : desired_) {
    if (actual.count(key) == 0) {
      diff.to_create.push_back(pod);
    } else {
      ++diff.unchanged;
    }
  }
  for (const auto& [key, zone] : actual) {
    if (desired_.count(key) == 0) diff.to_destroy.push_back(zone);
  }

  for (const auto& pod : diff.to_create) {
    ZoneSpec spec;
    spec.kernel_image = pod.kernel_image;
    spec.memory_mib = pod.memory_mib;
    spec.vcpus = pod.vcpus;
    spec.role = ZoneRole::kWorkload;
    WorkloadBinding binding{pod.pod_namespace, pod.name, pod.containers};
    auto created = backend_->create_pod_zone(spec, binding);
    if (!created.is_ok()) {
      diff.failures.push_back("create " + pod.pod_namespace + "/" + pod.name + ": " +
                              created.error().to_string());
    }
  }
  for (const auto& zone : diff.to_destroy) {
    if (auto st = backend_->destroy_pod_zone(zone); !st.is_ok()) {
      diff.failures.push_back("destroy " + zone.to_string() + ": " + st.error().to_string());
    }
  }
  return diff;
}

Result<std::vector<PodBinding>> CriShim::list_bindings() const {
  auto zones = backend_->pod_zones();
  if (!zones.is_ok()) return Error(Errc::kDaemonUnavailable, "daemon unreachable");
  std::vector<PodBinding> bindings;
  for (const auto& record : zones.value()) {
    if (record.state == ZoneState::kDeprovisioned) continue;
    bindings.push_back({record.workload->pod_namespace, record.workload->pod_name, record.id,
                        record.state});
  }
  std::sort(bindings.begin(), bindings.end(), [](const PodBinding& a, const PodBinding& b) {
    return std::tie(a.pod_namespace, a.pod_name) < std::tie(b.pod_namespace, b.pod_name);
  });
  return bindings;
}

std::optional<ReconcileDiff> CriShim::tick(std::uint64_t now_ms) {
  if (now_ms < next_reconcile_ms_) return std::nullopt;
  next_reconcile_ms_ = now_ms + kReconcilePeriodMs;
  auto diff = reconcile();
  if (!diff.is_ok()) return std::nullopt;  // daemon down: retry next period
  return diff.take();
}

}  // namespace edera
