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

#include "edera/orchestrator.hpp"

#include <algorithm>
#include <utility>

namespace edera {

std::string_view to_string(ServiceStatus status) {
  switch (status) {
    case ServiceStatus::kHealthy: return "healthy";
    case ServiceStatus::kDegraded: return "degraded";
    case ServiceStatus::kFailed: return "failed";
  }
  return "failed";
}

void Orchestrator::register_service(std::string name, Hooks hooks) {
  Service service;
  service.name = std::move(name);
  service.hooks = std::move(hooks);
  services_.push_back(std::move(service));
}

std::vector<ServiceHealth> Orchestrator::health_sweep(std::uint64_t now_ms) {
  for (Service& service : services_) {
    service.last_check_ms = now_ms;
    const bool alive = service.hooks.probe && service.hooks.probe();
    if (alive) {
      service.status = ServiceStatus::kHealthy;
      service.backoff_ms = kBackoffBaseMs;
      service.next_restart_ms = 0;
      continue;
    }
    if (now_ms < service.next_restart_ms) {
      // Still inside the backoff window: down, and not being restarted yet.
      service.status = ServiceStatus::kFailed;
      continue;
    }
    if (service.hooks.restart) (void)service.hooks.restart();
    ++service.restarts;
    service.next_restart_ms = now_ms + service.backoff_ms;
    service.backoff_ms = std::min(service.backoff_ms * kBackoffFactor, kBackoffCapMs);
    // Restarted this sweep; the next probe decides whether it took.
    service.status = ServiceStatus::kDegraded;
  }
  return health();
}

std::vector<ServiceHealth> Orchestrator::health() const {
  std::vector<ServiceHealth> out;
  out.reserve(services_.size());
  for (const Service& service : services_) {
    out.push_back({service.name, service.status, service.restarts, service.last_check_ms});
  }
  return out;
}

void Orchestrator::attach_sources(const ZoneDaemon* daemon, const NetProxy* proxy) {
  daemon_ = daemon;
  proxy_ = proxy;
}

std::string Orchestrator::render_metrics() const {
  std::vector<std::string> lines;

  if (daemon_ != nullptr) {
    for (const auto& [state, count] : daemon_->zone_counts()) {
      lines.push_back("edera_zones{state=\"" + std::string(to_label(state)) + "\"} " +
                      std::to_string(count));
    }
    lines.push_back("edera_zones_created_total " + std::to_string(daemon_->zones_created()));
    lines.push_back("edera_zones_destroyed_total " +
                    std::to_string(daemon_->zones_destroyed()));
    const Hypervisor& hv = daemon_->hypervisor();
    lines.push_back("edera_ledger_free_pages " + std::to_string(hv.free_pages()));
    lines.push_back("edera_ledger_unpinned_cpus " + std::to_string(hv.unpinned_cpu_count()));
    lines.push_back("edera_isolation_events_total " +
                    std::to_string(hv.isolation_events().size()));
  }

  if (proxy_ != nullptr) {
    const TrafficCounters counters = proxy_->snapshot_counters();
    lines.push_back("edera_net_packets_seen_total " +
                    std::to_string(counters.total.seen_packets));
    lines.push_back("edera_net_packets_delivered_total " +
                    std::to_string(counters.total.delivered_packets));
    lines.push_back("edera_net_packets_dropped_total " +
                    std::to_string(counters.total.dropped_packets));
    lines.push_back("edera_net_bytes_seen_total " + std::to_string(counters.total.seen_bytes));
    lines.push_back("edera_net_bytes_delivered_total " +
                    std::to_string(counters.total.delivered_bytes));
    lines.push_back("edera_net_bytes_dropped_total " +
                    std::to_string(counters.total.dropped_bytes));
  }

  for (const Service& service : services_) {
    lines.push_back("edera_service_restarts_total{service=\"" + service.name + "\"} " +
                    std::to_string(service.restarts));
    lines.push_back("edera_service_up{service=\"" + service.name + "\"} " +
                    std::string(service.status == ServiceStatus::kHealthy ? "1" : "0"));
  }

  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace edera
