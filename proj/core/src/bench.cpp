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

#include "edera/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

namespace edera {
namespace {

std::string format_ms(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

// Small fixed shape for timing runs; the latency under measurement is
// control-plane (boot delay + heartbeat cadence), not grant size.
ZoneSpec bench_spec() {
  ZoneSpec spec;
  spec.kernel_image = "bench/kernel";
  spec.memory_mib = 64;
  spec.vcpus = 1;
  return spec;
}

}  // namespace

std::string render_reference_table() {
  std::string out = "published reference, startup ms (measured elsewhere, never asserted "
                    "against this run):\n";
  for (const ReferenceRow& row : kPublishedStartupReference) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "  %-18s %8.1f\n", std::string(row.system).c_str(),
                  row.startup_ms);
    out += buf;
  }
  return out;
}

double mean_of(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (double sample : samples) sum += sample;
  return sum / static_cast<double>(samples.size());
}

double sample_stddev(const std::vector<double>& samples) {
  if (samples.size() < 2) return 0.0;
  const double mean = mean_of(samples);
  double squares = 0.0;
  for (double sample : samples) squares += (sample - mean) * (sample - mean);
  return std::sqrt(squares / static_cast<double>(samples.size() - 1));
}

double stderr_of(const std::vector<double>& samples) {
  if (samples.size() < 2) return 0.0;
  return sample_stddev(samples) / std::sqrt(static_cast<double>(samples.size()));
}

std::string BenchReport::render() const {
  std::string out;
  out += "benchmark: " + scenario + "\n";
  out += "clock: " + std::string(wall_clock ? "wall" : "logical") + "\n";
  out += "runs: " + std::to_string(runs) + "\n";
  out += "samples_ms:";
  for (double sample : samples_ms) out += " " + format_ms(sample);
  out += "\n";
  out += "mean_ms: " + format_ms(mean_ms) + "\n";
  out += "stderr_ms: " + format_ms(stderr_ms) + "\n";
  out += render_reference_table();
  return out;
}

void BenchHarness::step(bool wall_clock) {
  if (wall_clock) {
    std::this_thread::sleep_for(std::chrono::milliseconds(quantum_ms_));
  }
  clock_->advance(quantum_ms_);
  daemon_->pump(clock_->now_ms());
  (void)daemon_->supervise(clock_->now_ms());
}

Result<double> BenchHarness::one_cold_run(bool wall_clock) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::uint64_t t0 = clock_->now_ms();
  auto created = daemon_->create_zone(bench_spec(), /*warm=*/false);
  if (!created.is_ok()) return created.error();
  const ZoneId id = created.value().id;

  const std::uint64_t deadline =
      t0 + daemon_->config().boot_delay_ms + 10ull * daemon_->config().heartbeat_interval_ms +
      1000;
  for (;;) {
    auto record = daemon_->zone(id);
    if (record.is_ok() && record.value().state == ZoneState::kActive) break;
    if (clock_->now_ms() > deadline) {
      (void)daemon_->destroy_zone(id);
      return Error(Errc::kScenarioFailed, "zone never reached Active");
    }
    step(wall_clock);
  }

  double latency;
  if (wall_clock) {
    latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                        wall_start)
                  .count();
  } else {
    latency = static_cast<double>(clock_->now_ms() - t0);
  }
  (void)daemon_->destroy_zone(id);
  return latency;
}

Result<double> BenchHarness::one_warm_run(bool wall_clock) {
  ZoneSpec spec = bench_spec();
  spec.memory_mib = 0;  // warm zones hold nothing until activation
  spec.vcpus = 0;
  auto created = daemon_->create_zone(spec, /*warm=*/true);
  if (!created.is_ok()) return created.error();
  const ZoneId id = created.value().id;

  std::uint64_t deadline = clock_->now_ms() + daemon_->config().boot_delay_ms +
                           10ull * daemon_->config().heartbeat_interval_ms + 1000;
  for (;;) {
    auto record = daemon_->zone(id);
    if (record.is_ok() && record.value().state == ZoneState::kWarm) break;
    if (clock_->now_ms() > deadline) {
      (void)daemon_->destroy_zone(id);
      return Error(Errc::kScenarioFailed, "zone never reached Warm");
    }
    step(wall_clock);
  }

  // The timed section: activation to the first heartbeat strictly after it.
  // The zone's boot-complete beat carries the activation instant's timestamp,
  // so >= t0 would always read zero; > t0 measures a real beat interval.
  const auto wall_start = std::chrono::steady_clock::now();
  const std::uint64_t t0 = clock_->now_ms();
  auto activated = daemon_->activate_zone(id, 1, 64);
  if (!activated.is_ok()) {
    (void)daemon_->destroy_zone(id);
    return activated.error();
  }
  deadline = t0 + 10ull * daemon_->config().heartbeat_interval_ms + 1000;
  for (;;) {
    auto record = daemon_->zone(id);
    if (record.is_ok() && record.value().last_heartbeat_ms.has_value() &&
        *record.value().last_heartbeat_ms > t0 && record.value().state == ZoneState::kActive) {
      break;
    }
    if (clock_->now_ms() > deadline) {
      (void)daemon_->destroy_zone(id);
      return Error(Errc::kScenarioFailed, "no heartbeat after activation");
    }
    step(wall_clock);
  }

  double latency;
  if (wall_clock) {
    latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                        wall_start)
                  .count();
  } else {
    latency = static_cast<double>(clock_->now_ms() - t0);
  }
  (void)daemon_->destroy_zone(id);
  return latency;
}

Result<BenchReport> BenchHarness::startup(std::uint32_t runs, bool warm, bool wall_clock) {
  if (runs < 2) {
    return Error(Errc::kInvalidArgument, "need at least 2 runs for a standard error");
  }
  BenchReport report;
  report.scenario = warm ? "startup-warm" : "startup-cold";
  report.runs = runs;
  report.wall_clock = wall_clock;
  for (std::uint32_t i = 0; i < runs; ++i) {
    auto sample = warm ? one_warm_run(wall_clock) : one_cold_run(wall_clock);
    if (!sample.is_ok()) return sample.error();
    report.samples_ms.push_back(sample.value());
  }
  report.mean_ms = mean_of(report.samples_ms);
  report.stderr_ms = stderr_of(report.samples_ms);
  return report;
}

}  // namespace edera
