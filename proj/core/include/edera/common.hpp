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

#ifndef EDERA_COMMON_HPP_
#define EDERA_COMMON_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace edera {

// Error codes shared by every layer. Codes are part of the public surface:
// they cross the RPC boundary by name and are matched by the CLI.
enum class Errc {
  // Lifecycle and argument validation.
  kIllegalTransition,
  kInvalidArgument,
  // Hypervisor resource accounting.
  kInsufficientMemory,
  kInsufficientCpus,
  kNoSuchDomain,
  kRootUndestroyable,
  kCpuBusy,
  kBadCpuIndex,
  kNotPinnedHere,
  kPermissionFault,
  kNoRunnableDomains,
  // Messaging.
  kPayloadTooLarge,
  kBadMagic,
  kBadVersion,
  kFrameTooLarge,
  kTruncated,
  kCrcMismatch,
  kUnknownType,
  kChannelClosed,
  kBackpressure,
  // Persistence.
  kStoreUnavailable,
  kNoSuchKey,
  kAccessDenied,
  // Zone daemon.
  kNoSuchZone,
  kZoneNotActive,
  kDeviceBusy,
  kNoSuchDevice,
  kNoSuchSlice,
  kSliceNotBound,
  kDriverUnavailable,
  // Networking.
  kDialRefused,
  // Pod front door.
  kMalformedManifest,
  kBadAnnotationValue,
  kUnmanagedPod,
  kDaemonUnavailable,
  // Scenario driver and RPC transport.
  kScenarioFailed,
  kRpcError,
};

std::string_view to_string(Errc code);

// Parses a code name previously produced by to_string(Errc).
std::optional<Errc> errc_from_string(std::string_view name);

class Error {
 public:
  explicit Error(Errc code, std::string message = {})
      : code_(code), message_(std::move(message)) {}

  Errc code() const { return code_; }
  const std::string& message() const { return message_; }

  // "InsufficientMemory: need 153600 pages, 1024 free"
  std::string to_string() const;

 private:
  Errc code_;
  std::string message_;
};

// Success-or-Error. Default-constructed Status is success.
class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)) {}  // NOLINT: implicit by design
  Status(Errc code, std::string message = {})
      : error_(Error(code, std::move(message))) {}

  static Status ok() { return Status(); }

  bool is_ok() const { return !error_.has_value(); }
  explicit operator bool() const { return is_ok(); }

  // Precondition: !is_ok().
  const Error& error() const { return *error_; }
  Errc code() const { return error_->code(); }

 private:
  std::optional<Error> error_;
};

// Value-or-Error. Like Status but carries a payload on success.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : state_(std::move(value)) {}       // NOLINT: implicit by design
  Result(Error error) : state_(std::move(error)) {}   // NOLINT: implicit by design
  Result(Errc code, std::string message = {})
      : state_(Error(code, std::move(message))) {}

  bool is_ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return is_ok(); }

  // Precondition for value accessors: is_ok().
  T& value() & { return std::get<T>(state_); }
  const T& value() const& { return std::get<T>(state_); }
  T&& take() { return std::get<T>(std::move(state_)); }

  // Precondition: !is_ok().
  const Error& error() const { return std::get<Error>(state_); }
  Errc code() const { return error().code(); }

  Status status() const {
    if (is_ok()) return Status::ok();
    return Status(error());
  }

 private:
  std::variant<T, Error> state_;
};

// Milliseconds on the simulation timeline. The clock only moves when a test
// or the daemon pump advances it, which keeps every timing path replayable.
class LogicalClock {
 public:
  LogicalClock() = default;
  explicit LogicalClock(std::uint64_t start_ms) : now_ms_(start_ms) {}

  std::uint64_t now_ms() const { return now_ms_; }
  void advance(std::uint64_t delta_ms) { now_ms_ += delta_ms; }

 private:
  std::uint64_t now_ms_ = 0;
};

}  // namespace edera

#endif  // EDERA_COMMON_HPP_
