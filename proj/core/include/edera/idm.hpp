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

#ifndef EDERA_IDM_HPP_
#define EDERA_IDM_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edera/common.hpp"

namespace edera::idm {

// Frame layout, fixed for the lifetime of version 0x01:
//   magic 0xED 0x7A | version 0x01 | msg_type u8 | stream_id u32 BE |
//   payload_len u32 BE | payload | crc32 u32 BE (IEEE, over all prior bytes)
inline constexpr std::uint8_t kMagic0 = 0xED;
inline constexpr std::uint8_t kMagic1 = 0x7A;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::size_t kTrailerBytes = 4;
inline constexpr std::size_t kMaxPayloadBytes = 1048576;
inline constexpr std::size_t kInflightBudget = 64;

enum class MsgType : std::uint8_t {
  kHeartbeat = 0x01,
  kEvent = 0x02,
  kExecRequest = 0x03,
  kExecOutput = 0x04,
  kExitEvent = 0x05,
  kLog = 0x06,
  kDeviceRequest = 0x07,
  kDeviceReply = 0x08,
};

struct Frame {
  MsgType type = MsgType::kHeartbeat;
  std::uint32_t stream_id = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

Result<std::vector<std::uint8_t>> encode_frame(MsgType type, std::uint32_t stream_id,
                                               const std::vector<std::uint8_t>& payload);

struct DecodedFrame {
  Frame frame;
  std::size_t consumed = 0;  // bytes the frame occupied in the input
};

// Safe on arbitrary bytes. The declared length is validated before any
// payload-sized buffering happens.
Result<DecodedFrame> decode_frame(const std::uint8_t* data, std::size_t size);
Result<DecodedFrame> decode_frame(const std::vector<std::uint8_t>& bytes);

// Payload encoding: tag u8 | length u16 BE | value. Multi-byte integer
// values are big-endian.
class TlvWriter {
 public:
  void add(std::uint8_t tag, const std::uint8_t* value, std::size_t size);
  void add(std::uint8_t tag, const std::vector<std::uint8_t>& value);
  void add_string(std::uint8_t tag, std::string_view value);
  void add_u8(std::uint8_t tag, std::uint8_t value);
  void add_u32(std::uint8_t tag, std::uint32_t value);
  void add_u64(std::uint8_t tag, std::uint64_t value);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

struct TlvField {
  std::uint8_t tag = 0;
  const std::uint8_t* value = nullptr;
  std::size_t size = 0;

  std::string_view as_string() const {
    return {reinterpret_cast<const char*>(value), size};
  }
  std::vector<std::uint8_t> as_bytes() const { return {value, value + size}; }
};

class TlvReader {
 public:
  TlvReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit TlvReader(const std::vector<std::uint8_t>& payload)
      : TlvReader(payload.data(), payload.size()) {}

  // nullopt at clean end of payload; Truncated if a field is cut short.
  Result<std::optional<TlvField>> next();

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

Result<std::uint8_t> tlv_u8(const TlvField& field);
Result<std::uint32_t> tlv_u32(const TlvField& field);
Result<std::uint64_t> tlv_u64(const TlvField& field);

// Payload schemas: the tag set each message type carries. Wire constants,
// shared by both channel ends. Repeated tags concatenate (kStdin, kOutputData)
// or accumulate in order (kArgvEntry).
namespace tags {
// ExecRequest
inline constexpr std::uint8_t kArgvEntry = 0x01;
inline constexpr std::uint8_t kStdin = 0x02;
// Event
inline constexpr std::uint8_t kEventKind = 0x01;
inline constexpr std::uint8_t kEventDetail = 0x02;
inline constexpr std::uint8_t kEventAt = 0x03;
// ExecOutput (channel 1 = stdout, 2 = stderr)
inline constexpr std::uint8_t kOutputChannel = 0x01;
inline constexpr std::uint8_t kOutputData = 0x02;
// ExitEvent
inline constexpr std::uint8_t kExitCode = 0x01;
// Log
inline constexpr std::uint8_t kLogLine = 0x01;
// DeviceRequest (op 1 = read, 2 = write)
inline constexpr std::uint8_t kDeviceId = 0x01;
inline constexpr std::uint8_t kDeviceSlice = 0x02;
inline constexpr std::uint8_t kDeviceOp = 0x03;
inline constexpr std::uint8_t kDeviceOffset = 0x04;
inline constexpr std::uint8_t kDeviceData = 0x05;
inline constexpr std::uint8_t kDeviceLen = 0x06;
// DeviceReply
inline constexpr std::uint8_t kReplyStatus = 0x01;
inline constexpr std::uint8_t kReplyData = 0x02;
}  // namespace tags

enum class Side : std::uint8_t { kDaemon, kZone };

namespace internal {
struct ChannelState;
}  // namespace internal

// One end of a daemon<->zone channel. Handles are cheap shared references;
// closing either end closes the whole channel. Each direction enforces the
// inflight budget independently.
class Endpoint {
 public:
  Endpoint() = default;

  Status send(const Frame& frame);
  // Ok(nullopt) when the queue is empty.
  Result<std::optional<Frame>> recv();
  void close();
  bool closed() const;
  std::size_t inflight() const;  // frames this side has sent, not yet received
  Side side() const { return side_; }

 private:
  friend std::pair<Endpoint, Endpoint> make_channel(std::size_t);
  Endpoint(std::shared_ptr<internal::ChannelState> state, Side side)
      : state_(std::move(state)), side_(side) {}

  std::shared_ptr<internal::ChannelState> state_;
  Side side_ = Side::kDaemon;
};

// Returns {daemon side, zone side}.
std::pair<Endpoint, Endpoint> make_channel(std::size_t inflight_budget = kInflightBudget);

}  // namespace edera::idm

#endif  // EDERA_IDM_HPP_
