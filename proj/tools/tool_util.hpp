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

#ifndef EDERA_TOOLS_TOOL_UTIL_HPP_
#define EDERA_TOOLS_TOOL_UTIL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "edera/common.hpp"

namespace edera::tools {

inline constexpr std::string_view kDefaultListen = "127.0.0.1:7670";

// "host:port" with an IPv4 host. Port must parse and fit 16 bits.
inline std::optional<std::pair<std::string, std::uint16_t>> parse_listen(
    const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= address.size()) {
    return std::nullopt;
  }
  const std::string host = address.substr(0, colon);
  const std::string port_text = address.substr(colon + 1);
  std::uint32_t port = 0;
  for (char c : port_text) {
    if (c < '0' || c > '9') return std::nullopt;
    port = port * 10 + static_cast<std::uint32_t>(c - '0');
    if (port > 65535) return std::nullopt;
  }
  return std::make_pair(host, static_cast<std::uint16_t>(port));
}

// Error envelope carried in a status-1 reply body.
inline std::string error_body(const Error& error) {
  nlohmann::json body;
  body["error"]["code"] = std::string(to_string(error.code()));
  body["error"]["message"] = error.message();
  return body.dump();
}

inline Error error_from_body(const std::string& body) {
  auto parsed = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.contains("error")) {
    return Error(Errc::kRpcError, "malformed error reply");
  }
  const auto& node = parsed["error"];
  const std::string code_name = node.value("code", "");
  const std::string message = node.value("message", "");
  const auto code = errc_from_string(code_name);
  return Error(code.value_or(Errc::kRpcError), message);
}

inline std::string to_hex(const std::uint8_t* data, std::size_t size) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0x0F]);
  }
  return out;
}

inline std::optional<std::string> from_hex(const std::string& text) {
  if (text.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    const int hi = nibble(text[i]);
    const int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

}  // namespace edera::tools

#endif  // EDERA_TOOLS_TOOL_UTIL_HPP_
