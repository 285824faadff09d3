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

#include "edera/net_proxy.hpp"

#include <utility>

namespace edera {
namespace {

bool is_live(std::optional<ZoneState> state) {
  return state.has_value() && *state != ZoneState::kDeprovisioned;
}

}  // namespace

Result<RouteOutcome> NetProxy::route_packet(const ZoneId& src, const PacketDst& dst,
                                            std::vector<std::uint8_t> payload) {
  std::lock_guard<std::mutex> lock(mu_);
  return route_locked(src, dst, std::move(payload));
}

Result<RouteOutcome> NetProxy::route_locked(const ZoneId& src, const PacketDst& dst,
                                            std::vector<std::uint8_t> payload) {
  const auto src_state = zones_.zone_state(src);
  if (!is_live(src_state)) {
    return Error(Errc::kNoSuchZone, "source zone " + src.to_string());
  }

  PerZoneCounters& counters = counters_[src];
  const std::uint64_t bytes = payload.size();
  ++counters.seen_packets;
  counters.seen_bytes += bytes;

  const auto drop = [&](DropReason reason) {
    ++counters.dropped_packets;
    counters.dropped_bytes += bytes;
    RouteOutcome outcome;
    outcome.delivered = false;
    outcome.reason = reason;
    return outcome;
  };

  if (payload.size() > kMaxPacketBytes) {
    return drop(DropReason::kTooLarge);
  }
  if (*src_state == ZoneState::kQuarantined) {
    return drop(DropReason::kQuarantined);
  }

  if (const ZoneId* dst_zone = std::get_if<ZoneId>(&dst)) {
    if (!is_live(zones_.zone_state(*dst_zone))) {
      return drop(DropReason::kNoRoute);
    }
    ZonePacket packet;
    packet.src = src;
    packet.dst = dst;
    packet.seq = next_seq_[src]++;
    packet.payload = std::move(payload);
    inboxes_[*dst_zone].push_back(std::move(packet));
  } else {
    const std::string& address = std::get<std::string>(dst);
    const auto endpoint = endpoints_.find(address);
    if (endpoint == endpoints_.end()) {
      return drop(DropReason::kNoRoute);
    }
    endpoint->second.insert(endpoint->second.end(), payload.begin(), payload.end());
    next_seq_[src]++;
  }
  ++counters.delivered_packets;
  counters.delivered_bytes += bytes;
  RouteOutcome outcome;
  outcome.delivered = true;
  return outcome;
}

Result<std::uint64_t> NetProxy::dial_socket(const ZoneId& zone, const std::string& target) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto state = zones_.zone_state(zone);
  if (!state.has_value() || *state != ZoneState::kActive) {
    return Error(Errc::kZoneNotActive, "zone " + zone.to_string() + " is " +
                                           std::string(state.has_value() ? to_string(*state)
                                                                         : "unknown"));
  }
  if (endpoints_.find(target) == endpoints_.end()) {
    return Error(Errc::kDialRefused, "no endpoint at " + target);
  }
  const std::uint64_t stream_id = next_stream_id_++;
  streams_[stream_id] = Stream{zone, target};
  return stream_id;
}

Result<RouteOutcome> NetProxy::stream_write(std::uint64_t stream_id,
                                            const std::vector<std::uint8_t>& bytes) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = streams_.find(stream_id);
  if (it == streams_.end()) {
    return Error(Errc::kInvalidArgument, "unknown stream");
  }
  // Stream bytes take the same counted path as packets; quarantine applies
  // to a stream opened before the quarantine began.
  std::vector<std::uint8_t> copy = bytes;
  return route_locked(it->second.zone, PacketDst(it->second.target), std::move(copy));
}

void NetProxy::register_endpoint(const std::string& address) {
  std::lock_guard<std::mutex> lock(mu_);
  endpoints_.try_emplace(address);
}

Result<std::vector<std::uint8_t>> NetProxy::endpoint_bytes(const std::string& address) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = endpoints_.find(address);
  if (it == endpoints_.end()) {
    return Error(Errc::kInvalidArgument, "no endpoint at " + address);
  }
  return it->second;
}

std::optional<ZonePacket> NetProxy::recv_packet(const ZoneId& dst) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = inboxes_.find(dst);
  if (it == inboxes_.end() || it->second.empty()) return std::nullopt;
  ZonePacket packet = std::move(it->second.front());
  it->second.pop_front();
  return packet;
}

TrafficCounters NetProxy::snapshot_counters() const {
  std::lock_guard<std::mutex> lock(mu_);
  TrafficCounters snapshot;
  snapshot.per_zone = counters_;
  for (const auto& [zone, counters] : counters_) {
    snapshot.total.seen_packets += counters.seen_packets;
    snapshot.total.delivered_packets += counters.delivered_packets;
    snapshot.total.dropped_packets += counters.dropped_packets;
    snapshot.total.seen_bytes += counters.seen_bytes;
    snapshot.total.delivered_bytes += counters.delivered_bytes;
    snapshot.total.dropped_bytes += counters.dropped_bytes;
  }
  return snapshot;
}

Result<RouteOutcome> ZoneNetIf::send(const ZoneId& dst, std::vector<std::uint8_t> payload) {
  return proxy_.route_packet(self_, PacketDst(dst), std::move(payload));
}

Result<RouteOutcome> ZoneNetIf::send_external(const std::string& address,
                                              std::vector<std::uint8_t> payload) {
  return proxy_.route_packet(self_, PacketDst(address), std::move(payload));
}

std::optional<ZonePacket> ZoneNetIf::recv() { return proxy_.recv_packet(self_); }

}  // namespace edera
