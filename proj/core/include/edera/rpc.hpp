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

#ifndef EDERA_RPC_HPP_
#define EDERA_RPC_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "edera/common.hpp"

namespace edera::rpc {

// Local control transport between the CLI and the daemon. Requests and
// responses ride the same frame format as zone messaging, on a dedicated
// TCP connection:
//   request   ExecRequest frame, payload tlv: 0x01 method, 0x02 params
//   response  ExecOutput frame, same stream id, payload tlv:
//             0x01 status u8 (0 = ok), 0x02 body (repeated, concatenated)
// Bodies are opaque here; the daemon and CLI agree on JSON.
inline constexpr std::uint8_t kTagMethod = 0x01;
inline constexpr std::uint8_t kTagParams = 0x02;
inline constexpr std::uint8_t kTagStatus = 0x01;
inline constexpr std::uint8_t kTagBody = 0x02;

struct RpcReply {
  std::uint8_t status = 0;  // 0 ok; nonzero carries an error body
  std::string body;
};

using Handler = std::function<RpcReply(const std::string& method, const std::string& params)>;

// Single-threaded server: one connection served at a time, requests on one
// connection answered in order. That is the CLI's concurrency model.
class RpcServer {
 public:
  // port 0 picks an ephemeral port; port() reports the bound one.
  static Result<std::unique_ptr<RpcServer>> listen(const std::string& host, std::uint16_t port,
                                                   Handler handler);
  ~RpcServer();

  RpcServer(const RpcServer&) = delete;
  RpcServer& operator=(const RpcServer&) = delete;

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }
  void stop();

 private:
  RpcServer(std::string host, std::uint16_t port, int listen_fd, Handler handler);
  void serve();
  void serve_connection(int fd);

  std::string host_;
  std::uint16_t port_;
  int listen_fd_;
  Handler handler_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> active_fd_{-1};
  std::thread thread_;
};

class RpcClient {
 public:
  static Result<RpcClient> connect(const std::string& host, std::uint16_t port,
                                   int timeout_ms = 30000);
  ~RpcClient();

  RpcClient(RpcClient&& other) noexcept;
  RpcClient& operator=(RpcClient&& other) noexcept;

  Result<RpcReply> call(const std::string& method, const std::string& params);

  // One-shot convenience: connect, call, close.
  static Result<RpcReply> call_once(const std::string& host, std::uint16_t port,
                                    const std::string& method, const std::string& params,
                                    int timeout_ms = 30000);

 private:
  explicit RpcClient(int fd) : fd_(fd) {}

  int fd_ = -1;
  std::uint32_t next_stream_ = 1;
};

}  // namespace edera::rpc

#endif  // EDERA_RPC_HPP_
