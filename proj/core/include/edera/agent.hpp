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

#ifndef EDERA_AGENT_HPP_
#define EDERA_AGENT_HPP_

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "edera/common.hpp"
#include "edera/idm.hpp"
#include "edera/zone.hpp"

namespace edera {

inline constexpr std::uint32_t kMinHeartbeatIntervalMs = 10;
inline constexpr std::uint32_t kDefaultHeartbeatIntervalMs = 500;
inline constexpr std::size_t kMaxEventDetailBytes = 4096;
// Output is split so each chunk fits a single tlv value.
inline constexpr std::size_t kExecChunkBytes = 65535;

struct AgentConfig {
  std::uint32_t heartbeat_interval_ms = kDefaultHeartbeatIntervalMs;
  ZoneId zone_id;
};

enum class MonitorEventKind : std::uint8_t {
  kProcessStart = 1,
  kProcessExit = 2,
  kResourcePressure = 3,
  kPagetableFaultObserved = 4,
  kCustom = 5,
};

// The init process of one zone, simulated. It owns the zone side of the IDM
// channel: heartbeats on a fixed cadence, monitored events, command
// execution with streamed output. Everything is driven by tick(now), so the
// emitted frame sequence is a pure function of the inputs.
class InitAgent {
 public:
  static Result<InitAgent> create(AgentConfig config, idm::Endpoint endpoint,
                                  std::uint64_t start_ms);

  // Drains inbound requests, then emits due heartbeats, queued events, and
  // finished command output. Multiple elapsed intervals coalesce into one
  // heartbeat; a backpressured heartbeat is retried next tick, never dropped.
  Status tick(std::uint64_t now_ms);

  // Runs argv against the simulated command table. Output chunks and the
  // terminal exit frame are emitted by later ticks, tagged with stream_id.
  Status exec(std::uint32_t stream_id, const std::vector<std::string>& argv,
              std::vector<std::uint8_t> stdin_bytes, std::uint64_t now_ms);

  // detail is clamped to kMaxEventDetailBytes.
  void queue_event(MonitorEventKind kind, std::string detail, std::uint64_t at_ms);
  void queue_log(std::string line);

  // A disabled agent emits nothing and processes nothing, permanently.
  void disable();
  bool disabled() const { return disabled_; }

  std::uint64_t heartbeats_emitted() const { return heartbeats_emitted_; }
  const AgentConfig& config() const { return config_; }

 private:
  InitAgent(AgentConfig config, idm::Endpoint endpoint, std::uint64_t start_ms);

  struct PendingExec {
    std::uint64_t due_ms = 0;
    std::uint32_t stream_id = 0;
    std::string command;
    std::vector<std::uint8_t> stdout_bytes;
    std::vector<std::uint8_t> stderr_bytes;
    std::uint32_t exit_code = 0;
    bool crash_after = false;
  };

  Status drain_inbound(std::uint64_t now_ms);
  void handle_exec_request(const idm::Frame& frame, std::uint64_t now_ms);
  void handle_device_request(const idm::Frame& frame);
  void finish_due_execs(std::uint64_t now_ms);
  Status flush();

  AgentConfig config_;
  idm::Endpoint endpoint_;
  std::uint64_t last_emit_ms_ = 0;
  bool heartbeat_pending_ = false;
  bool disabled_ = false;
  bool crash_when_flushed_ = false;
  std::uint64_t heartbeats_emitted_ = 0;
  std::deque<idm::Frame> outbox_;
  std::vector<PendingExec> pending_execs_;
};

}  // namespace edera

#endif  // EDERA_AGENT_HPP_
