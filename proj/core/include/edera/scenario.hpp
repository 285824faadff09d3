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

#ifndef EDERA_SCENARIO_HPP_
#define EDERA_SCENARIO_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "edera/common.hpp"
#include "edera/daemon.hpp"

namespace edera {

// Escape-analog drills. Each models a class of container escape and asserts
// the blast radius stays inside one zone:
//   pagetable-write  guest writes to page tables fault and mutate nothing
//   fd-namespace     a leaked store handle cannot cross its zone/<id> prefix
//   driver-fault     a crashed driver zone takes down nothing else
inline constexpr std::array<std::string_view, 3> kScenarioNames = {
    "pagetable-write",
    "fd-namespace",
    "driver-fault",
};

struct ScenarioCheck {
  std::string description;
  bool passed = false;
};

struct ScenarioReport {
  std::string name;
  bool passed = false;
  std::vector<ScenarioCheck> checks;

  // First failed check, empty when passed.
  std::string violated() const;
  std::string render() const;
};

// Runs drills against a live daemon. Zones the drill creates are destroyed
// on the way out; counters and tombstones remain, as after any workload.
class ScenarioRunner {
 public:
  ScenarioRunner(ZoneDaemon& daemon, LogicalClock& clock, std::uint64_t quantum_ms = 50)
      : daemon_(&daemon), clock_(&clock), quantum_ms_(quantum_ms) {}

  Result<ScenarioReport> run(std::string_view name);
  Result<std::vector<ScenarioReport>> run_all();

 private:
  void step();
  // Pumps until the predicate holds; false on deadline.
  template <typename Predicate>
  bool pump_until(Predicate&& done, std::uint64_t max_wait_ms);
  Result<ZoneRecord> create_active_zone(std::uint64_t memory_mib, std::uint32_t vcpus);

  ScenarioReport pagetable_write();
  ScenarioReport fd_namespace();
  ScenarioReport driver_fault();

  ZoneDaemon* daemon_;
  LogicalClock* clock_;
  std::uint64_t quantum_ms_;
};

}  // namespace edera

#endif  // EDERA_SCENARIO_HPP_
