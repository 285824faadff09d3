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

#ifndef EDERA_ORCHESTRATOR_HPP_
#define EDERA_ORCHESTRATOR_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edera/daemon.hpp"
#include "edera/net_proxy.hpp"

namespace edera {

// Restart backoff schedule for failing services: 250, 500, 1000, ... capped.
inline constexpr std::uint64_t kBackoffBaseMs = 250;
inline constexpr std::uint64_t kBackoffFactor = 2;
inline constexpr std::uint64_t kBackoffCapMs = 8000;

enum class ServiceStatus : std::uint8_t { kHealthy, kDegraded, kFailed };

std::string_view to_string(ServiceStatus status);

struct ServiceHealth {
  std::string service;
  ServiceStatus status = ServiceStatus::kHealthy;
  std::uint64_t restarts = 0;  // monotone non-decreasing
  std::uint64_t last_check_ms = 0;
};

// Supervises the co-resident services and renders the metrics page.
// Probe and restart are in-process hooks: the services live in this
// process, so liveness is a function call, not a network check.
class Orchestrator {
 public:
  struct Hooks {
    std::function<bool()> probe;    // true = alive
    std::function<bool()> restart;  // true = restart succeeded
  };

  void register_service(std::string name, Hooks hooks);

  // Probes every service. A failing service is restarted when its backoff
  // window has elapsed; each restart doubles the next delay up to the cap,
  // and a healthy probe resets the schedule.
  std::vector<ServiceHealth> health_sweep(std::uint64_t now_ms);
  std::vector<ServiceHealth> health() const;

  // Prometheus-style text exposition, lexicographically ordered lines, so
  // two renders with no intervening activity are byte-identical.
  std::string render_metrics() const;

  void attach_sources(const ZoneDaemon* daemon, const NetProxy* proxy);

 private:
  struct Service {
    std::string name;
    Hooks hooks;
    ServiceStatus status = ServiceStatus::kHealthy;
    std::uint64_t restarts = 0;
    std::uint64_t last_check_ms = 0;
    std::uint64_t backoff_ms = kBackoffBaseMs;
    std::uint64_t next_restart_ms = 0;
  };

  std::vector<Service> services_;
  const ZoneDaemon* daemon_ = nullptr;
  const NetProxy* proxy_ = nullptr;
};

}  // namespace edera

#endif  // EDERA_ORCHESTRATOR_HPP_
