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

#include "edera/idm.hpp"

#include <zlib.h>

#include <deque>
#include <mutex>

namespace edera::idm {
namespace {

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(size)));
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t value) {
  out.push_back(static_cast<std::uint8_t>(value >> 24));
  out.push_back(static_cast<std::uint8_t>(value >> 16));
  out.push_back(static_cast<std::uint8_t>(value >> 8));
  out.push_back(static_cast<std::uint8_t>(value));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

bool known_type(std::uint8_t type) {
  return type >= static_cast<std::uint8_t>(MsgType::kHeartbeat) &&
         type <= static_cast<std::uint8_t>(MsgType::kDeviceReply);
}

}  // namespace

Result<std::vector<std::uint8_t>> encode_frame(MsgType type, std::uint32_t stream_id,
                                               const std::vector<std::uint8_t>& payload) {
  if (payload.size() > kMaxPayloadBytes) {
    return Error(Errc::kPayloadTooLarge,
                 std::to_string(payload.size()) + " bytes exceeds the 1 MiB payload cap");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + payload.size() + kTrailerBytes);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(type));
  put_u32_be(out, stream_id);
  put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  put_u32_be(out, crc32_ieee(out.data(), out.size()));
  return out;
}

Result<DecodedFrame> decode_frame(const std::uint8_t* data, std::size_t size) {
  // Checks run strictly in wire order so every malformed input maps to one
  // well-defined error: magic, version, declared length, completeness,
  // checksum, then message type.
  if (size >= 1 && data[0] != kMagic0) {
    return Error(Errc::kBadMagic, "first magic byte mismatch");
  }
  if (size >= 2 && data[1] != kMagic1) {
    return Error(Errc::kBadMagic, "second magic byte mismatch");
  }
  if (size >= 3 && data[2] != kVersion) {
    return Error(Errc::kBadVersion, "unsupported version");
  }
  if (size < kHeaderBytes) {
    return Error(Errc::kTruncated, "incomplete header");
  }
  const std::uint32_t payload_len = get_u32_be(data + 8);
  if (payload_len > kMaxPayloadBytes) {
    // Rejected on the declared length alone: nothing payload-sized is read
    // or allocated for an oversized frame.
    return Error(Errc::kFrameTooLarge,
                 "declared payload of " + std::to_string(payload_len) + " bytes");
  }
  const std::size_t total = kHeaderBytes + payload_len + kTrailerBytes;
  if (size < total) {
    return Error(Errc::kTruncated, "frame body incomplete");
  }
  const std::uint32_t declared_crc = get_u32_be(data + kHeaderBytes + payload_len);
  const std::uint32_t actual_crc = crc32_ieee(data, kHeaderBytes + payload_len);
  if (declared_crc != actual_crc) {
    return Error(Errc::kCrcMismatch, "checksum mismatch");
  }
  if (!known_type(data[3])) {
    return Error(Errc::kUnknownType, "msg_type " + std::to_string(data[3]));
  }
  DecodedFrame decoded;
  decoded.frame.type = static_cast<MsgType>(data[3]);
  decoded.frame.stream_id = get_u32_be(data + 4);
  decoded.frame.payload.assign(data + kHeaderBytes, data + kHeaderBytes + payload_len);
  decoded.consumed = total;
  return decoded;
}

Result<DecodedFrame> decode_frame(const std::vector<std::uint8_t>& bytes) {
  return decode_frame(bytes.data(), bytes.size());
}

void TlvWriter::add(std::uint8_t tag, const std::uint8_t* value, std::size_t size) {
  // Values longer than a u16 length field must be split by the caller.
  bytes_.push_back(tag);
  bytes_.push_back(static_cast<std::uint8_t>(size >> 8));
  bytes_.push_back(static_cast<std::uint8_t>(size));
  bytes_.insert(bytes_.end(), value, value + size);
}

void TlvWriter::add(std::uint8_t tag, const std::vector<std::uint8_t>& value) {
  add(tag, value.data(), value.size());
}

void TlvWriter::add_string(std::uint8_t tag, std::string_view value) {
  add(tag, reinterpret_cast<const std::uint8_t*>(value.data()), value.size());
}

void TlvWriter::add_u8(std::uint8_t tag, std::uint8_t value) { add(tag, &value, 1); }

void TlvWriter::add_u32(std::uint8_t tag, std::uint32_t value) {
  std::uint8_t buf[4] = {
      static_cast<std::uint8_t>(value >> 24),
      static_cast<std::uint8_t>(value >> 16),
      static_cast<std::uint8_t>(value >> 8),
      static_cast<std::uint8_t>(value),
  };
  add(tag, buf, sizeof buf);
}

void TlvWriter::add_u64(std::uint8_t tag, std::uint64_t value) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
  }
  add(tag, buf, sizeof buf);
}

Result<std::optional<TlvField>> TlvReader::next() {
  if (pos_ == size_) return std::optional<TlvField>();
  if (size_ - pos_ < 3) {
    return Error(Errc::kTruncated, "tlv header incomplete");
  }
  TlvField field;
  field.tag = data_[pos_];
  const std::size_t len = (static_cast<std::size_t>(data_[pos_ + 1]) << 8) | data_[pos_ + 2];
  if (size_ - pos_ - 3 < len) {
    return Error(Errc::kTruncated, "tlv value incomplete");
  }
  field.value = data_ + pos_ + 3;
  field.size = len;
  pos_ += 3 + len;
  return std::optional<TlvField>(field);
}

Result<std::uint8_t> tlv_u8(const TlvField& field) {
  if (field.size != 1) return Error(Errc::kTruncated, "expected a 1-byte value");
  return field.value[0];
}

Result<std::uint32_t> tlv_u32(const TlvField& field) {
  if (field.size != 4) return Error(Errc::kTruncated, "expected a 4-byte value");
  return get_u32_be(field.value);
}

Result<std::uint64_t> tlv_u64(const TlvField& field) {
  if (field.size != 8) return Error(Errc::kTruncated, "expected an 8-byte value");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    value = (value << 8) | field.value[i];
  }
  return value;
}

namespace internal {

struct ChannelState {
  std::mutex mu;
  bool closed = false;
  std::size_t budget = kInflightBudget;
  // Frames are stored encoded so delivery is bit-exact by construction.
  std::deque<std::vector<std::uint8_t>> to_zone;
  std::deque<std::vector<std::uint8_t>> to_daemon;
};

}  // namespace internal

Status Endpoint::send(const Frame& frame) {
  if (!state_) return Status(Errc::kChannelClosed, "endpoint is not attached");
  auto encoded = encode_frame(frame.type, frame.stream_id, frame.payload);
  if (!encoded.is_ok()) return encoded.status();
  std::lock_guard<std::mutex> lock(state_->mu);
  if (state_->closed) return Status(Errc::kChannelClosed);
  auto& queue = side_ == Side::kDaemon ? state_->to_zone : state_->to_daemon;
  if (queue.size() >= state_->budget) {
    return Status(Errc::kBackpressure, "inflight budget of " +
                                           std::to_string(state_->budget) + " frames reached");
  }
  queue.push_back(encoded.take());
  return Status::ok();
}

Result<std::optional<Frame>> Endpoint::recv() {
  if (!state_) return Error(Errc::kChannelClosed, "endpoint is not attached");
  std::vector<std::uint8_t> bytes;
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    if (state_->closed) return Error(Errc::kChannelClosed);
    auto& queue = side_ == Side::kDaemon ? state_->to_daemon : state_->to_zone;
    if (queue.empty()) return std::optional<Frame>();
    bytes = std::move(queue.front());
    queue.pop_front();  // releases one unit of the sender's budget
  }
  auto decoded = decode_frame(bytes);
  if (!decoded.is_ok()) return decoded.error();
  return std::optional<Frame>(std::move(decoded.value().frame));
}

void Endpoint::close() {
  if (!state_) return;
  std::lock_guard<std::mutex> lock(state_->mu);
  state_->closed = true;
  state_->to_zone.clear();
  state_->to_daemon.clear();
}

bool Endpoint::closed() const {
  if (!state_) return true;
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->closed;
}

std::size_t Endpoint::inflight() const {
  if (!state_) return 0;
  std::lock_guard<std::mutex> lock(state_->mu);
  return side_ == Side::kDaemon ? state_->to_zone.size() : state_->to_daemon.size();
}

std::pair<Endpoint, Endpoint> make_channel(std::size_t inflight_budget) {
  auto state = std::make_shared<internal::ChannelState>();
  state->budget = inflight_budget == 0 ? 1 : inflight_budget;
  return {Endpoint(state, Side::kDaemon), Endpoint(state, Side::kZone)};
}

}  // namespace edera::idm
