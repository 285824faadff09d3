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

#include "edera/agent.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <utility>

namespace edera {
namespace {

// Payload field tags. Shared with the daemon's encoders; documented in
// docs/idm-wire.md.
constexpr std::uint8_t kTagArgvEntry = idm::tags::kArgvEntry;
constexpr std::uint8_t kTagStdin = idm::tags::kStdin;
constexpr std::uint8_t kTagEventKind = idm::tags::kEventKind;
constexpr std::uint8_t kTagEventDetail = idm::tags::kEventDetail;
constexpr std::uint8_t kTagEventAt = idm::tags::kEventAt;
constexpr std::uint8_t kTagOutputChannel = idm::tags::kOutputChannel;
constexpr std::uint8_t kTagOutputData = idm::tags::kOutputData;
constexpr std::uint8_t kTagExitCode = idm::tags::kExitCode;
constexpr std::uint8_t kTagLogLine = idm::tags::kLogLine;
constexpr std::uint8_t kTagReplyStatus = idm::tags::kReplyStatus;
constexpr std::uint8_t kTagReplyData = idm::tags::kReplyData;

constexpr std::uint32_t kExitCommandNotFound = 127;
constexpr std::uint32_t kExitBadUsage = 2;
constexpr std::uint32_t kExitCrash = 137;

std::optional<std::uint64_t> parse_number(const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

void append_bytes(std::vector<std::uint8_t>& out, std::string_view text) {
  out.insert(out.end(), text.begin(), text.end());
}

}  // namespace

InitAgent::InitAgent(AgentConfig config, idm::Endpoint endpoint, std::uint64_t start_ms)
    : config_(config), endpoint_(std::move(endpoint)), last_emit_ms_(start_ms) {}

Result<InitAgent> InitAgent::create(AgentConfig config, idm::Endpoint endpoint,
                                    std::uint64_t start_ms) {
  if (config.heartbeat_interval_ms < kMinHeartbeatIntervalMs) {
    return Error(Errc::kInvalidArgument, "heartbeat interval below " +
                                             std::to_string(kMinHeartbeatIntervalMs) + " ms");
  }
  return InitAgent(config, std::move(endpoint), start_ms);
}

Status InitAgent::tick(std::uint64_t now_ms) {
  if (disabled_) return Status::ok();
  if (Status status = drain_inbound(now_ms); !status.is_ok()) return status;
  if (now_ms >= last_emit_ms_ + config_.heartbeat_interval_ms) {
    // One pending flag, not a counter: elapsed intervals coalesce.
    heartbeat_pending_ = true;
    last_emit_ms_ = now_ms;
  }
  finish_due_execs(now_ms);
  return flush();
}

Status InitAgent::drain_inbound(std::uint64_t now_ms) {
  while (true) {
    auto received = endpoint_.recv();
    if (!received.is_ok()) return received.status();
    if (!received.value().has_value()) return Status::ok();
    const idm::Frame& frame = *received.value();
    switch (frame.type) {
      case idm::MsgType::kExecRequest:
        handle_exec_request(frame, now_ms);
        break;
      case idm::MsgType::kDeviceRequest:
        handle_device_request(frame);
        break;
      default:
        break;  // nothing else is addressed to the agent
    }
  }
}

void InitAgent::handle_exec_request(const idm::Frame& frame, std::uint64_t now_ms) {
  std::vector<std::string> argv;
  std::vector<std::uint8_t> stdin_bytes;
  idm::TlvReader reader(frame.payload);
  while (true) {
    auto field = reader.next();
    if (!field.is_ok()) break;  // malformed request payload: fall through
    if (!field.value().has_value()) break;
    const idm::TlvField& f = *field.value();
    if (f.tag == kTagArgvEntry) {
      argv.emplace_back(f.as_string());
    } else if (f.tag == kTagStdin) {
      stdin_bytes.insert(stdin_bytes.end(), f.value, f.value + f.size);
    }
  }
  if (argv.empty()) {
    // Even a malformed request gets its terminal exit frame.
    idm::TlvWriter exit_payload;
    exit_payload.add_u32(kTagExitCode, kExitCommandNotFound);
    outbox_.push_back({idm::MsgType::kExitEvent, frame.stream_id, exit_payload.take()});
    return;
  }
  (void)exec(frame.stream_id, argv, std::move(stdin_bytes), now_ms);
}

void InitAgent::handle_device_request(const idm::Frame& frame) {
  // The simulated driver acknowledges every request; the daemon applies the
  // operation to slice memory when the acknowledgment arrives.
  idm::TlvWriter payload;
  payload.add_u8(kTagReplyStatus, 0);
  payload.add(kTagReplyData, nullptr, 0);
  outbox_.push_back({idm::MsgType::kDeviceReply, frame.stream_id, payload.take()});
}

Status InitAgent::exec(std::uint32_t stream_id, const std::vector<std::string>& argv,
                       std::vector<std::uint8_t> stdin_bytes, std::uint64_t now_ms) {
  if (disabled_) return Status(Errc::kInvalidArgument, "agent is disabled");
  if (argv.empty()) return Status(Errc::kInvalidArgument, "argv must be non-empty");

  queue_event(MonitorEventKind::kProcessStart, argv[0], now_ms);

  PendingExec exec;
  exec.stream_id = stream_id;
  exec.command = argv[0];
  exec.due_ms = now_ms;

  const std::string& cmd = argv[0];
  if (cmd == "echo") {
    std::string line;
    for (std::size_t i = 1; i < argv.size(); ++i) {
      if (i > 1) line += ' ';
      line += argv[i];
    }
    line += '\n';
    append_bytes(exec.stdout_bytes, line);
  } else if (cmd == "true") {
    // exit 0, no output
  } else if (cmd == "false") {
    exec.exit_code = 1;
  } else if (cmd == "cat") {
    exec.stdout_bytes = std::move(stdin_bytes);
  } else if (cmd == "gen") {
    std::optional<std::uint64_t> count;
    if (argv.size() == 2) count = parse_number(argv[1]);
    if (!count.has_value()) {
      exec.exit_code = kExitBadUsage;
      append_bytes(exec.stderr_bytes, "gen: usage: gen <byte-count>\n");
    } else {
      exec.stdout_bytes.resize(*count);
      for (std::uint64_t i = 0; i < *count; ++i) {
        exec.stdout_bytes[i] = static_cast<std::uint8_t>(i & 0xFF);
      }
    }
  } else if (cmd == "sleep") {
    std::optional<std::uint64_t> duration;
    if (argv.size() == 2) duration = parse_number(argv[1]);
    if (!duration.has_value()) {
      exec.exit_code = kExitBadUsage;
      append_bytes(exec.stderr_bytes, "sleep: usage: sleep <milliseconds>\n");
    } else {
      exec.due_ms = now_ms + *duration;
    }
  } else if (cmd == "crash") {
    exec.exit_code = kExitCrash;
    exec.crash_after = true;
  } else {
    exec.exit_code = kExitCommandNotFound;
    append_bytes(exec.stderr_bytes, "exec: " + cmd + ": command not found\n");
  }
  pending_execs_.push_back(std::move(exec));
  return Status::ok();
}

void InitAgent::finish_due_execs(std::uint64_t now_ms) {
  std::vector<PendingExec> still_pending;
  still_pending.reserve(pending_execs_.size());
  for (auto& exec : pending_execs_) {
    if (exec.due_ms > now_ms) {
      still_pending.push_back(std::move(exec));
      continue;
    }
    const auto emit_chunks = [&](std::uint8_t channel, const std::vector<std::uint8_t>& data) {
      for (std::size_t offset = 0; offset < data.size(); offset += kExecChunkBytes) {
        const std::size_t len = std::min(kExecChunkBytes, data.size() - offset);
        idm::TlvWriter payload;
        payload.add_u8(kTagOutputChannel, channel);
        payload.add(kTagOutputData, data.data() + offset, len);
        outbox_.push_back({idm::MsgType::kExecOutput, exec.stream_id, payload.take()});
      }
    };
    emit_chunks(1, exec.stdout_bytes);
    emit_chunks(2, exec.stderr_bytes);
    idm::TlvWriter exit_payload;
    exit_payload.add_u32(kTagExitCode, exec.exit_code);
    outbox_.push_back({idm::MsgType::kExitEvent, exec.stream_id, exit_payload.take()});
    if (exec.crash_after) crash_when_flushed_ = true;
    queue_event(MonitorEventKind::kProcessExit,
                exec.command + " exit=" + std::to_string(exec.exit_code), now_ms);
  }
  pending_execs_ = std::move(still_pending);
}

void InitAgent::queue_event(MonitorEventKind kind, std::string detail, std::uint64_t at_ms) {
  if (disabled_) return;
  if (detail.size() > kMaxEventDetailBytes) detail.resize(kMaxEventDetailBytes);
  idm::TlvWriter payload;
  payload.add_u8(kTagEventKind, static_cast<std::uint8_t>(kind));
  payload.add_string(kTagEventDetail, detail);
  payload.add_u64(kTagEventAt, at_ms);
  outbox_.push_back({idm::MsgType::kEvent, 0, payload.take()});
}

void InitAgent::queue_log(std::string line) {
  if (disabled_) return;
  if (line.size() > kMaxEventDetailBytes) line.resize(kMaxEventDetailBytes);
  idm::TlvWriter payload;
  payload.add_string(kTagLogLine, line);
  outbox_.push_back({idm::MsgType::kLog, 0, payload.take()});
}

Status InitAgent::flush() {
  if (heartbeat_pending_) {
    Status sent = endpoint_.send({idm::MsgType::kHeartbeat, 0, {}});
    if (sent.is_ok()) {
      heartbeat_pending_ = false;
      ++heartbeats_emitted_;
    } else if (sent.code() == Errc::kBackpressure) {
      return Status::ok();  // retried next tick
    } else {
      return sent;
    }
  }
  while (!outbox_.empty()) {
    Status sent = endpoint_.send(outbox_.front());
    if (!sent.is_ok()) {
      if (sent.code() == Errc::kBackpressure) return Status::ok();
      return sent;
    }
    outbox_.pop_front();
  }
  if (crash_when_flushed_) {
    // The simulated init has died. Every already-queued frame (including the
    // crash's terminal exit frame) went out first; nothing follows.
    disable();
  }
  return Status::ok();
}

void InitAgent::disable() {
  disabled_ = true;
  crash_when_flushed_ = false;
  outbox_.clear();
  pending_execs_.clear();
  heartbeat_pending_ = false;
}

}  // namespace edera
