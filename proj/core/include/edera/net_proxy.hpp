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

#ifndef EDERA_NET_PROXY_HPP_
#define EDERA_NET_PROXY_HPP_

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "edera/common.hpp"
#include "edera/zone.hpp"

namespace edera {

inline constexpr std::size_t kMaxPacketBytes = 64 * 1024;

// Where the proxy looks up zone liveness. The daemon implements this, which
// is what makes quarantine enforcement automatic: the proxy consults current
// state on every packet.
class ZoneDirectory {
 public:
  virtual ~ZoneDirectory() = default;
  virtual std::optional<ZoneState> zone_state(const ZoneId& id) const = 0;
};

// A destination is another zone or an opaque external address.
using PacketDst = std::variant<ZoneId, std::string>;

struct ZonePacket {
  ZoneId src;
  PacketDst dst;
  std::vector<std::uint8_t> payload;
  std::uint64_t seq = 0;  // stamped by the proxy, monotone per source
};

enum class DropReason : std::uint8_t {
  kQuarantined,
  kNoRoute,
  kTooLarge,
};

struct RouteOutcome {
  bool delivered = false;
  std::optional<DropReason> reason;
};

struct PerZoneCounters {
  std::uint64_t seen_packets = 0;
  std::uint64_t delivered_packets = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t seen_bytes = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t dropped_bytes = 0;

  bool operator==(const PerZoneCounters&) const = default;
};

struct TrafficCounters {
  std::map<ZoneId, PerZoneCounters> per_zone;  // keyed by source zone
  PerZoneCounters total;

  bool operator==(const TrafficCounters&) const = default;
};

// protect-network. Every packet a zone emits lands here first: counted,
// checked against quarantine, then delivered or dropped. Drops are silent to
// the sender; the counters are the observability channel.
class NetProxy {
 public:
  explicit NetProxy(const ZoneDirectory& zones) : zones_(zones) {}

  // seen++ unconditionally (for any existing source); drops are results,
  // not errors. Per-(src,dst) delivery order matches emission order.
  Result<RouteOutcome> route_packet(const ZoneId& src, const PacketDst& dst,
                                    std::vector<std::uint8_t> payload);

  // Opens an outbound stream on the zone's behalf. Bytes written later are
  // counted against the zone.
  Result<std::uint64_t> dial_socket(const ZoneId& zone, const std::string& target);
  Result<RouteOutcome> stream_write(std::uint64_t stream_id,
                                    const std::vector<std::uint8_t>& bytes);

  // Test/simulation endpoint table for external targets.
  void register_endpoint(const std::string& address);
  Result<std::vector<std::uint8_t>> endpoint_bytes(const std::string& address) const;

  // Pops the oldest packet delivered to dst, if any.
  std::optional<ZonePacket> recv_packet(const ZoneId& dst);

  TrafficCounters snapshot_counters() const;

 private:
  struct Stream {
    ZoneId zone;
    std::string target;
  };

  Result<RouteOutcome> route_locked(const ZoneId& src, const PacketDst& dst,
                                    std::vector<std::uint8_t> payload);

  const ZoneDirectory& zones_;
  mutable std::mutex mu_;
  std::map<ZoneId, std::deque<ZonePacket>> inboxes_;
  std::map<std::string, std::vector<std::uint8_t>> endpoints_;
  std::map<std::uint64_t, Stream> streams_;
  std::map<ZoneId, std::uint64_t> next_seq_;
  std::map<ZoneId, PerZoneCounters> counters_;
  std::uint64_t next_stream_id_ = 1;
};

// The only network interface a zone gets. It holds a reference to the proxy
// and nothing else, so there is structurally no path around protect-network.
class ZoneNetIf {
 public:
  ZoneNetIf(NetProxy& proxy, ZoneId self) : proxy_(proxy), self_(self) {}

  Result<RouteOutcome> send(const ZoneId& dst, std::vector<std::uint8_t> payload);
  Result<RouteOutcome> send_external(const std::string& address,
                                     std::vector<std::uint8_t> payload);
  std::optional<ZonePacket> recv();

  const ZoneId& zone() const { return self_; }

 private:
  NetProxy& proxy_;
  ZoneId self_;
};

}  // namespace edera

#endif  // EDERA_NET_PROXY_HPP_
