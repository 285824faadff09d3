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

#include "edera/rpc.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>
#include <vector>

#include "edera/idm.hpp"

namespace edera::rpc {
namespace {

Status set_timeout(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  if (setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv)) != 0 ||
      setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv)) != 0) {
    return Status(Errc::kRpcError, "setsockopt failed");
  }
  return Status::ok();
}

Status write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return Status(Errc::kRpcError, "connection write failed");
    }
    sent += static_cast<std::size_t>(n);
  }
  return Status::ok();
}

// Reads frames off a byte stream. Truncated from the decoder means "wait for
// more bytes"; anything else is a protocol violation and ends the stream.
class FrameStream {
 public:
  explicit FrameStream(int fd) : fd_(fd) {}

  Result<idm::Frame> next() {
    for (;;) {
      if (!buffer_.empty()) {
        auto decoded = idm::decode_frame(buffer_.data(), buffer_.size());
        if (decoded.is_ok()) {
          idm::Frame frame = std::move(decoded.value().frame);
          buffer_.erase(buffer_.begin(),
                        buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.value().consumed));
          return frame;
        }
        if (decoded.code() != Errc::kTruncated) return decoded.error();
      }
      std::uint8_t chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n == 0) return Error(Errc::kChannelClosed, "peer closed the connection");
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          return Error(Errc::kRpcError, "read timed out");
        }
        return Error(Errc::kRpcError, "connection read failed");
      }
      buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
  }

 private:
  int fd_;
  std::vector<std::uint8_t> buffer_;
};

Result<std::vector<std::uint8_t>> encode_request(std::uint32_t stream,
                                                 const std::string& method,
                                                 const std::string& params) {
  idm::TlvWriter payload;
  payload.add_string(kTagMethod, method);
  constexpr std::size_t kChunk = 65535;
  for (std::size_t offset = 0; offset < params.size(); offset += kChunk) {
    payload.add_string(kTagParams, std::string_view(params).substr(offset, kChunk));
  }
  return idm::encode_frame(idm::MsgType::kExecRequest, stream, payload.bytes());
}

Result<std::vector<std::uint8_t>> encode_response(std::uint32_t stream, const RpcReply& reply) {
  idm::TlvWriter payload;
  payload.add_u8(kTagStatus, reply.status);
  constexpr std::size_t kChunk = 65535;
  for (std::size_t offset = 0; offset < reply.body.size(); offset += kChunk) {
    payload.add_string(kTagBody, std::string_view(reply.body).substr(offset, kChunk));
  }
  return idm::encode_frame(idm::MsgType::kExecOutput, stream, payload.bytes());
}

}  // namespace

RpcServer::RpcServer(std::string host, std::uint16_t port, int listen_fd, Handler handler)
    : host_(std::move(host)), port_(port), listen_fd_(listen_fd), handler_(std::move(handler)) {
  thread_ = std::thread([this] { serve(); });
}

Result<std::unique_ptr<RpcServer>> RpcServer::listen(const std::string& host,
                                                     std::uint16_t port, Handler handler) {
  if (!handler) return Error(Errc::kInvalidArgument, "handler must be set");
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return Error(Errc::kRpcError, "socket() failed");
  const int one = 1;
  (void)setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return Error(Errc::kInvalidArgument, "listen host must be an IPv4 address");
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return Error(Errc::kRpcError, std::string("bind failed: ") + std::strerror(errno));
  }
  if (::listen(fd, 16) != 0) {
    ::close(fd);
    return Error(Errc::kRpcError, "listen failed");
  }

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len) != 0) {
    ::close(fd);
    return Error(Errc::kRpcError, "getsockname failed");
  }
  return std::unique_ptr<RpcServer>(
      new RpcServer(host, ntohs(bound.sin_port), fd, std::move(handler)));
}

RpcServer::~RpcServer() { stop(); }

void RpcServer::stop() {
  if (stopping_.exchange(true)) {
    if (thread_.joinable()) thread_.join();
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  const int active = active_fd_.load();
  if (active >= 0) ::shutdown(active, SHUT_RDWR);  // unblock an in-flight read
  if (thread_.joinable()) thread_.join();
}

void RpcServer::serve() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_.load()) break;
      if (errno == EINTR) continue;
      break;  // listen socket is gone
    }
    active_fd_.store(fd);
    serve_connection(fd);
    active_fd_.store(-1);
    ::close(fd);
  }
}

void RpcServer::serve_connection(int fd) {
  // Generous cap so a long benchmark round-trip is not cut off; idle
  // connections hit this and are dropped.
  (void)set_timeout(fd, 120000);
  FrameStream stream(fd);
  while (!stopping_.load()) {
    auto frame = stream.next();
    if (!frame.is_ok()) return;
    if (frame.value().type != idm::MsgType::kExecRequest) continue;

    std::string method;
    std::string params;
    idm::TlvReader reader(frame.value().payload);
    for (;;) {
      auto field = reader.next();
      if (!field.is_ok() || !field.value().has_value()) break;
      const idm::TlvField& f = *field.value();
      if (f.tag == kTagMethod) method = std::string(f.as_string());
      if (f.tag == kTagParams) params += std::string(f.as_string());
    }

    RpcReply reply = handler_(method, params);
    auto encoded = encode_response(frame.value().stream_id, reply);
    if (!encoded.is_ok()) {
      // Response too large for one frame: degrade to a small error reply.
      RpcReply fallback{1, R"({"error":{"code":"RpcError","message":"response too large"}})"};
      encoded = encode_response(frame.value().stream_id, fallback);
      if (!encoded.is_ok()) return;
    }
    if (!write_all(fd, encoded.value()).is_ok()) return;
  }
}

Result<RpcClient> RpcClient::connect(const std::string& host, std::uint16_t port,
                                     int timeout_ms) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return Error(Errc::kRpcError, "socket() failed");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return Error(Errc::kInvalidArgument, "host must be an IPv4 address");
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return Error(Errc::kRpcError,
                 "cannot reach daemon at " + host + ":" + std::to_string(port));
  }
  if (auto st = set_timeout(fd, timeout_ms); !st.is_ok()) {
    ::close(fd);
    return st.error();
  }
  return RpcClient(fd);
}

RpcClient::~RpcClient() {
  if (fd_ >= 0) ::close(fd_);
}

RpcClient::RpcClient(RpcClient&& other) noexcept
    : fd_(other.fd_), next_stream_(other.next_stream_) {
  other.fd_ = -1;
}

RpcClient& RpcClient::operator=(RpcClient&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    next_stream_ = other.next_stream_;
    other.fd_ = -1;
  }
  return *this;
}

Result<RpcReply> RpcClient::call(const std::string& method, const std::string& params) {
  if (fd_ < 0) return Error(Errc::kRpcError, "client is closed");
  const std::uint32_t stream = next_stream_++;
  auto encoded = encode_request(stream, method, params);
  if (!encoded.is_ok()) return encoded.error();
  if (auto st = write_all(fd_, encoded.value()); !st.is_ok()) return st.error();

  FrameStream frames(fd_);
  for (;;) {
    auto frame = frames.next();
    if (!frame.is_ok()) return frame.error();
    if (frame.value().type != idm::MsgType::kExecOutput) continue;
    if (frame.value().stream_id != stream) continue;

    RpcReply reply;
    idm::TlvReader reader(frame.value().payload);
    for (;;) {
      auto field = reader.next();
      if (!field.is_ok() || !field.value().has_value()) break;
      const idm::TlvField& f = *field.value();
      if (f.tag == kTagStatus && f.size == 1) reply.status = f.value[0];
      if (f.tag == kTagBody) reply.body += std::string(f.as_string());
    }
    return reply;
  }
}

Result<RpcReply> RpcClient::call_once(const std::string& host, std::uint16_t port,
                                      const std::string& method, const std::string& params,
                                      int timeout_ms) {
  auto client = RpcClient::connect(host, port, timeout_ms);
  if (!client.is_ok()) return client.error();
  return client.value().call(method, params);
}

}  // namespace edera::rpc
