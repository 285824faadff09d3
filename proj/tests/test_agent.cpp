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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "edera/idm.hpp"

namespace edera {
namespace {

struct Harness {
  idm::Endpoint daemon;
  InitAgent agent;
};

Harness make_agent(std::uint32_t interval_ms = 100, std::uint64_t start_ms = 0,
                   std::size_t budget = idm::kInflightBudget) {
  auto [daemon, zone] = idm::make_channel(budget);
  AgentConfig config;
  config.heartbeat_interval_ms = interval_ms;
  config.zone_id = SeededUuidGenerator(424242).next();
  auto agent = InitAgent::create(config, std::move(zone), start_ms);
  EXPECT_TRUE(agent.is_ok());
  return Harness{std::move(daemon), agent.take()};
}

std::vector<idm::Frame> drain(idm::Endpoint& endpoint) {
  std::vector<idm::Frame> frames;
  while (true) {
    auto received = endpoint.recv();
    if (!received.is_ok() || !received.value().has_value()) return frames;
    frames.push_back(std::move(*received.value()));
  }
}

std::size_t count_type(const std::vector<idm::Frame>& frames, idm::MsgType type) {
  std::size_t n = 0;
  for (const auto& frame : frames) {
    if (frame.type == type) ++n;
  }
  return n;
}

struct ParsedEvent {
  std::uint8_t kind = 0;
  std::string detail;
  std::uint64_t at_ms = 0;
};

ParsedEvent parse_event(const idm::Frame& frame) {
  ParsedEvent event;
  idm::TlvReader reader(frame.payload);
  while (true) {
    auto field = reader.next().take();
    if (!field.has_value()) break;
    if (field->tag == idm::tags::kEventKind) event.kind = idm::tlv_u8(*field).take();
    if (field->tag == idm::tags::kEventDetail) event.detail = field->as_string();
    if (field->tag == idm::tags::kEventAt) event.at_ms = idm::tlv_u64(*field).take();
  }
  return event;
}

// Reassembles one exec conversation: stdout, stderr, and the exit code.
struct ExecOutcome {
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> err;
  std::optional<std::uint32_t> exit_code;
  std::size_t output_frames = 0;
};

ExecOutcome collect_exec(const std::vector<idm::Frame>& frames, std::uint32_t stream_id) {
  ExecOutcome outcome;
  for (const auto& frame : frames) {
    if (frame.stream_id != stream_id) continue;
    if (frame.type == idm::MsgType::kExecOutput) {
      ++outcome.output_frames;
      std::uint8_t channel = 0;
      idm::TlvReader reader(frame.payload);
      while (true) {
        auto field = reader.next().take();
        if (!field.has_value()) break;
        if (field->tag == idm::tags::kOutputChannel) channel = idm::tlv_u8(*field).take();
        if (field->tag == idm::tags::kOutputData) {
          auto& sink = channel == 2 ? outcome.err : outcome.out;
          sink.insert(sink.end(), field->value, field->value + field->size);
        }
      }
    } else if (frame.type == idm::MsgType::kExitEvent) {
      idm::TlvReader reader(frame.payload);
      while (true) {
        auto field = reader.next().take();
        if (!field.has_value()) break;
        if (field->tag == idm::tags::kExitCode) {
          outcome.exit_code = idm::tlv_u32(*field).take();
        }
      }
    }
  }
  return outcome;
}

std::vector<std::uint8_t> bytes_of(std::string_view text) {
  return std::vector<std::uint8_t>(text.begin(), text.end());
}

TEST(Heartbeat, EmitsOnCadenceNotBefore) {
  auto h = make_agent(100, 0);
  ASSERT_TRUE(h.agent.tick(50).is_ok());
  EXPECT_TRUE(drain(h.daemon).empty());

  ASSERT_TRUE(h.agent.tick(100).is_ok());
  auto frames = drain(h.daemon);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].type, idm::MsgType::kHeartbeat);
  EXPECT_EQ(frames[0].stream_id, 0u);
  EXPECT_TRUE(frames[0].payload.empty());

  ASSERT_TRUE(h.agent.tick(150).is_ok());
  EXPECT_TRUE(drain(h.daemon).empty());
  ASSERT_TRUE(h.agent.tick(200).is_ok());
  EXPECT_EQ(drain(h.daemon).size(), 1u);
  EXPECT_EQ(h.agent.heartbeats_emitted(), 2u);
}

TEST(Heartbeat, ElapsedIntervalsCoalesceIntoOne) {
  auto h = make_agent(100, 0);
  // Ten intervals pass unobserved; exactly one heartbeat comes out.
  ASSERT_TRUE(h.agent.tick(1000).is_ok());
  auto frames = drain(h.daemon);
  EXPECT_EQ(count_type(frames, idm::MsgType::kHeartbeat), 1u);
  EXPECT_EQ(h.agent.heartbeats_emitted(), 1u);
}

TEST(Heartbeat, BackpressuredBeatIsRetriedNeverDropped) {
  auto h = make_agent(100, 0, /*budget=*/1);
  h.agent.queue_log("filler");
  ASSERT_TRUE(h.agent.tick(100).is_ok());
  // Budget 1: the heartbeat went out, the log is stuck behind it.
  EXPECT_EQ(h.agent.heartbeats_emitted(), 1u);

  // Next interval: channel still full, so the beat stays pending.
  ASSERT_TRUE(h.agent.tick(200).is_ok());
  EXPECT_EQ(h.agent.heartbeats_emitted(), 1u);

  auto first = drain(h.daemon);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].type, idm::MsgType::kHeartbeat);

  // Space again: the pending beat flushes on the next tick, then the log
  // once the beat itself is consumed.
  ASSERT_TRUE(h.agent.tick(201).is_ok());
  EXPECT_EQ(h.agent.heartbeats_emitted(), 2u);
  auto second = drain(h.daemon);
  ASSERT_EQ(second.size(), 1u);
  EXPECT_EQ(second[0].type, idm::MsgType::kHeartbeat);

  ASSERT_TRUE(h.agent.tick(202).is_ok());
  auto rest = drain(h.daemon);
  ASSERT_EQ(rest.size(), 1u);
  EXPECT_EQ(rest[0].type, idm::MsgType::kLog);
}

TEST(Heartbeat, RejectsIntervalBelowFloor) {
  auto [daemon, zone] = idm::make_channel();
  AgentConfig config;
  config.heartbeat_interval_ms = kMinHeartbeatIntervalMs - 1;
  auto agent = InitAgent::create(config, std::move(zone), 0);
  ASSERT_FALSE(agent.is_ok());
  EXPECT_EQ(agent.code(), Errc::kInvalidArgument);
  (void)daemon;
}

TEST(Exec, EchoJoinsArgvWithNewline) {
  auto h = make_agent();
  ASSERT_TRUE(h.agent.exec(7, {"echo", "hello", "world"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto frames = drain(h.daemon);
  auto outcome = collect_exec(frames, 7);
  EXPECT_EQ(outcome.out, bytes_of("hello world\n"));
  EXPECT_TRUE(outcome.err.empty());
  EXPECT_EQ(outcome.exit_code, 0u);
}

TEST(Exec, TrueAndFalseSetExitCodesOnly) {
  auto h = make_agent();
  ASSERT_TRUE(h.agent.exec(1, {"true"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.exec(2, {"false"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto frames = drain(h.daemon);
  EXPECT_EQ(collect_exec(frames, 1).exit_code, 0u);
  EXPECT_EQ(collect_exec(frames, 2).exit_code, 1u);
  EXPECT_EQ(collect_exec(frames, 1).output_frames, 0u);
}

TEST(Exec, CatEchoesStdin) {
  auto h = make_agent();
  auto stdin_bytes = bytes_of("pipe me through");
  ASSERT_TRUE(h.agent.exec(3, {"cat"}, stdin_bytes, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 3);
  EXPECT_EQ(outcome.out, stdin_bytes);
  EXPECT_EQ(outcome.exit_code, 0u);
}

TEST(Exec, LargeOutputIsChunked) {
  auto h = make_agent();
  const std::size_t total = 150000;  // forces three chunks of <= 65535
  ASSERT_TRUE(h.agent.exec(4, {"gen", std::to_string(total)}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 4);
  EXPECT_EQ(outcome.output_frames, 3u);
  ASSERT_EQ(outcome.out.size(), total);
  for (std::size_t i = 0; i < total; ++i) {
    ASSERT_EQ(outcome.out[i], static_cast<std::uint8_t>(i & 0xFF)) << "offset " << i;
  }
  EXPECT_EQ(outcome.exit_code, 0u);
}

TEST(Exec, BadUsageReportsOnStderr) {
  auto h = make_agent();
  ASSERT_TRUE(h.agent.exec(5, {"gen", "many"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 5);
  EXPECT_EQ(outcome.exit_code, 2u);
  EXPECT_EQ(outcome.err, bytes_of("gen: usage: gen <byte-count>\n"));
}

TEST(Exec, SleepDefersCompletionUntilDue) {
  auto h = make_agent(1000);  // long interval keeps heartbeats out of the way
  ASSERT_TRUE(h.agent.exec(6, {"sleep", "500"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto early = drain(h.daemon);
  EXPECT_EQ(count_type(early, idm::MsgType::kExitEvent), 0u);
  EXPECT_EQ(count_type(early, idm::MsgType::kEvent), 1u);  // process start

  ASSERT_TRUE(h.agent.tick(499).is_ok());
  EXPECT_EQ(count_type(drain(h.daemon), idm::MsgType::kExitEvent), 0u);

  ASSERT_TRUE(h.agent.tick(500).is_ok());
  auto done = drain(h.daemon);
  EXPECT_EQ(collect_exec(done, 6).exit_code, 0u);
}

TEST(Exec, UnknownCommandExits127) {
  auto h = make_agent();
  ASSERT_TRUE(h.agent.exec(8, {"frobnicate"}, {}, 0).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 8);
  EXPECT_EQ(outcome.exit_code, 127u);
  EXPECT_EQ(outcome.err, bytes_of("exec: frobnicate: command not found\n"));
}

TEST(Exec, EmptyArgvIsRejected) {
  auto h = make_agent();
  auto status = h.agent.exec(9, {}, {}, 0);
  ASSERT_FALSE(status.is_ok());
  EXPECT_EQ(status.code(), Errc::kInvalidArgument);
}

TEST(Exec, RequestFrameRoundTripsThroughChannel) {
  auto h = make_agent(1000);
  idm::TlvWriter payload;
  payload.add_string(idm::tags::kArgvEntry, "echo");
  payload.add_string(idm::tags::kArgvEntry, "over");
  payload.add_string(idm::tags::kArgvEntry, "idm");
  ASSERT_TRUE(h.daemon.send({idm::MsgType::kExecRequest, 42, payload.take()}).is_ok());

  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 42);
  EXPECT_EQ(outcome.out, bytes_of("over idm\n"));
  EXPECT_EQ(outcome.exit_code, 0u);
}

TEST(Exec, StdinChunksInRequestAreConcatenated) {
  auto h = make_agent(1000);
  idm::TlvWriter payload;
  payload.add_string(idm::tags::kArgvEntry, "cat");
  payload.add_string(idm::tags::kStdin, "first ");
  payload.add_string(idm::tags::kStdin, "second");
  ASSERT_TRUE(h.daemon.send({idm::MsgType::kExecRequest, 43, payload.take()}).is_ok());

  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 43);
  EXPECT_EQ(outcome.out, bytes_of("first second"));
}

TEST(Exec, RequestWithNoArgvStillGetsTerminalExit) {
  auto h = make_agent(1000);
  ASSERT_TRUE(h.daemon.send({idm::MsgType::kExecRequest, 44, {}}).is_ok());
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto outcome = collect_exec(drain(h.daemon), 44);
  ASSERT_TRUE(outcome.exit_code.has_value());
  EXPECT_EQ(*outcome.exit_code, 127u);
  EXPECT_EQ(outcome.output_frames, 0u);
}

TEST(Device, EveryRequestIsAcknowledgedWithStatusZero) {
  auto h = make_agent(1000);
  idm::TlvWriter request;
  request.add_u8(idm::tags::kDeviceOp, 1);
  ASSERT_TRUE(h.daemon.send({idm::MsgType::kDeviceRequest, 77, request.take()}).is_ok());

  ASSERT_TRUE(h.agent.tick(0).is_ok());
  auto frames = drain(h.daemon);
  ASSERT_EQ(count_type(frames, idm::MsgType::kDeviceReply), 1u);
  for (const auto& frame : frames) {
    if (frame.type != idm::MsgType::kDeviceReply) continue;
    EXPECT_EQ(frame.stream_id, 77u);
    idm::TlvReader reader(frame.payload);
    auto status_field = reader.next().take();
    ASSERT_TRUE(status_field.has_value());
    EXPECT_EQ(status_field->tag, idm::tags::kReplyStatus);
    EXPECT_EQ(idm::tlv_u8(*status_field).take(), 0u);
  }
}

TEST(Events, ProcessLifecycleIsObserved) {
  auto h = make_agent(1000);
  ASSERT_TRUE(h.agent.exec(10, {"true"}, {}, 25).is_ok());
  ASSERT_TRUE(h.agent.tick(25).is_ok());
  auto frames = drain(h.daemon);

  std::vector<ParsedEvent> events;
  for (const auto& frame : frames) {
    if (frame.type == idm::MsgType::kEvent) events.push_back(parse_event(frame));
  }
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].kind, static_cast<std::uint8_t>(MonitorEventKind::kProcessStart));
  EXPECT_EQ(events[0].detail, "true");
  EXPECT_EQ(events[0].at_ms, 25u);
  EXPECT_EQ(events[1].kind, static_cast<std::uint8_t>(MonitorEventKind::kProcessExit));
  EXPECT_EQ(events[1].detail, "true exit=0");
}

TEST(Events, DetailIsClampedToLimit) {
  auto h = make_agent(1000);
  std::string oversized(kMaxEventDetailBytes + 500, 'x');
  h.agent.queue_event(MonitorEventKind::kCustom, oversized, 1);
  ASSERT_TRUE(h.agent.tick(1).is_ok());
  auto frames = drain(h.daemon);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(parse_event(frames[0]).detail.size(), kMaxEventDetailBytes);
}

TEST(Crash, DisablesOnlyAfterOutboxFullyDrains) {
  auto h = make_agent(1000, 0, /*budget=*/2);
  ASSERT_TRUE(h.agent.exec(11, {"crash"}, {}, 0).is_ok());
  // Outbox now holds: start event, exit(137), exit event. Budget 2 means the
  // crash cannot complete on the first flush.
  ASSERT_TRUE(h.agent.tick(0).is_ok());
  EXPECT_FALSE(h.agent.disabled());

  auto first = drain(h.daemon);
  ASSERT_EQ(first.size(), 2u);

  // With space freed, the remaining frames leave and only then does the
  // agent die.
  ASSERT_TRUE(h.agent.tick(1).is_ok());
  EXPECT_TRUE(h.agent.disabled());

  auto rest = drain(h.daemon);
  std::vector<idm::Frame> all(first);
  all.insert(all.end(), rest.begin(), rest.end());
  auto outcome = collect_exec(all, 11);
  EXPECT_EQ(outcome.exit_code, 137u);
  EXPECT_EQ(count_type(all, idm::MsgType::kEvent), 2u);

  // Dead means silent: no heartbeats, no output, exec refused.
  ASSERT_TRUE(h.agent.tick(5000).is_ok());
  EXPECT_TRUE(drain(h.daemon).empty());
  EXPECT_FALSE(h.agent.exec(12, {"true"}, {}, 5000).is_ok());
}

TEST(Crash, DisabledAgentIsPermanentlySilent) {
  auto h = make_agent(100);
  ASSERT_TRUE(h.agent.tick(100).is_ok());
  EXPECT_EQ(drain(h.daemon).size(), 1u);

  h.agent.disable();
  h.agent.queue_log("into the void");
  h.agent.queue_event(MonitorEventKind::kCustom, "ignored", 200);
  for (std::uint64_t now = 200; now <= 1000; now += 100) {
    ASSERT_TRUE(h.agent.tick(now).is_ok());
  }
  EXPECT_TRUE(drain(h.daemon).empty());
  EXPECT_EQ(h.agent.heartbeats_emitted(), 1u);
}

TEST(Determinism, SameInputsProduceIdenticalFrameSequences) {
  auto run = [] {
    auto h = make_agent(100, 0);
    (void)h.agent.exec(1, {"echo", "deterministic"}, {}, 10);
    h.agent.queue_log("line one");
    (void)h.agent.tick(100);
    (void)h.agent.exec(2, {"gen", "1000"}, {}, 150);
    (void)h.agent.tick(200);
    std::vector<std::vector<std::uint8_t>> wire;
    for (auto& frame : drain(h.daemon)) {
      wire.push_back(idm::encode_frame(frame.type, frame.stream_id, frame.payload).take());
    }
    return wire;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace edera
