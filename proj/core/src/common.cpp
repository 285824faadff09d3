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

#include "edera/common.hpp"

#include <array>

namespace edera {
namespace {

struct ErrcName {
  Errc code;
  std::string_view name;
};

constexpr std::array<ErrcName, 36> kErrcNames = {{
    {Errc::kIllegalTransition, "IllegalTransition"},
    {Errc::kInvalidArgument, "InvalidArgument"},
    {Errc::kInsufficientMemory, "InsufficientMemory"},
    {Errc::kInsufficientCpus, "InsufficientCpus"},
    {Errc::kNoSuchDomain, "NoSuchDomain"},
    {Errc::kRootUndestroyable, "RootUndestroyable"},
    {Errc::kCpuBusy, "CpuBusy"},
    {Errc::kBadCpuIndex, "BadCpuIndex"},
    {Errc::kNotPinnedHere, "NotPinnedHere"},
    {Errc::kPermissionFault, "PermissionFault"},
    {Errc::kNoRunnableDomains, "NoRunnableDomains"},
    {Errc::kPayloadTooLarge, "PayloadTooLarge"},
    {Errc::kBadMagic, "BadMagic"},
    {Errc::kBadVersion, "BadVersion"},
    {Errc::kFrameTooLarge, "FrameTooLarge"},
    {Errc::kTruncated, "Truncated"},
    {Errc::kCrcMismatch, "CrcMismatch"},
    {Errc::kUnknownType, "UnknownType"},
    {Errc::kChannelClosed, "ChannelClosed"},
    {Errc::kBackpressure, "Backpressure"},
    {Errc::kStoreUnavailable, "StoreUnavailable"},
    {Errc::kNoSuchKey, "NoSuchKey"},
    {Errc::kAccessDenied, "AccessDenied"},
    {Errc::kNoSuchZone, "NoSuchZone"},
    {Errc::kZoneNotActive, "ZoneNotActive"},
    {Errc::kDeviceBusy, "DeviceBusy"},
    {Errc::kNoSuchDevice, "NoSuchDevice"},
    {Errc::kNoSuchSlice, "NoSuchSlice"},
    {Errc::kSliceNotBound, "SliceNotBound"},
    {Errc::kDriverUnavailable, "DriverUnavailable"},
    {Errc::kDialRefused, "DialRefused"},
    {Errc::kMalformedManifest, "MalformedManifest"},
    {Errc::kBadAnnotationValue, "BadAnnotationValue"},
    {Errc::kUnmanagedPod, "UnmanagedPod"},
    {Errc::kDaemonUnavailable, "DaemonUnavailable"},
    {Errc::kScenarioFailed, "ScenarioFailed"},
}};

}  // namespace

std::string_view to_string(Errc code) {
  for (const auto& entry : kErrcNames) {
    if (entry.code == code) return entry.name;
  }
  return "RpcError";
}

std::optional<Errc> errc_from_string(std::string_view name) {
  for (const auto& entry : kErrcNames) {
    if (entry.name == name) return entry.code;
  }
  if (name == "RpcError") return Errc::kRpcError;
  return std::nullopt;
}

std::string Error::to_string() const {
  std::string out(edera::to_string(code_));
  if (!message_.empty()) {
    out += ": ";
    out += message_;
  }
  return out;
}

}  // namespace edera
