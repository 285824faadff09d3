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

#ifndef EDERA_BENCH_HPP_
#define EDERA_BENCH_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "edera/common.hpp"
#include "edera/daemon.hpp"

namespace edera {

// Startup latencies reported by other systems, on other hardware, with real
// hypervisors. Context only: the harness never compares its own simulated
// measurements against these.
struct ReferenceRow {
  std::string_view system;
  double startup_ms;
};

inline constexpr std::array<ReferenceRow, 6> kPublishedStartupReference = {{
    {"Docker", 177.4},
    {"Docker bare-metal", 203.8},
    {"gVisor", 281.8},
    {"Edera-PV", 765.8},
    {"Edera-PVH", 968.6},
    {"Kata", 1934.2},
}};

std::string render_reference_table();

double mean_of(const std::vector<double>& samples);
// Sample (n-1) standard deviation; requires at least two samples.
double sample_stddev(const std::vector<double>& samples);
// Standard error of the mean: stddev / sqrt(n).
double stderr_of(const std::vector<double>& samples);

struct BenchReport {
  std::string scenario;  // "startup-cold" or "startup-warm"
  std::uint32_t runs = 0;
  bool wall_clock = false;
  std::vector<double> samples_ms;  // always printed, so stderr is recomputable
  double mean_ms = 0.0;
  double stderr_ms = 0.0;

  std::string render() const;
};

// Drives create/activate cycles against a live daemon and times them.
// Logical mode advances the injected clock only (deterministic, CI-safe);
// wall mode additionally sleeps each quantum and reports elapsed real time.
class BenchHarness {
 public:
  BenchHarness(ZoneDaemon& daemon, LogicalClock& clock, std::uint64_t quantum_ms = 10)
      : daemon_(&daemon), clock_(&clock), quantum_ms_(quantum_ms) {}

  // Cold: create to first heartbeat. Warm: activate (of a pre-warmed zone)
  // to the next heartbeat. K runs, each on a fresh zone.
  Result<BenchReport> startup(std::uint32_t runs, bool warm, bool wall_clock = false);

 private:
  void step(bool wall_clock);
  Result<double> one_cold_run(bool wall_clock);
  Result<double> one_warm_run(bool wall_clock);

  ZoneDaemon* daemon_;
  LogicalClock* clock_;
  std::uint64_t quantum_ms_;
};

}  // namespace edera

#endif  // EDERA_BENCH_HPP_
