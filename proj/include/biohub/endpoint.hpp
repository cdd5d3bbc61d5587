// Copyright 2026 The biohub Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BIOHUB__ENDPOINT_HPP_
#define BIOHUB__ENDPOINT_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace biohub
{

inline constexpr std::string_view kDefaultEndpoint = "127.0.0.1:7653";
inline constexpr const char * kEndpointEnvVar = "BIOHUB_ADDR";

/// `host:port` for TCP or `unix:/path` for a local-domain socket.
struct Endpoint
{
  enum class Transport { kTcp, kUnix };

  Transport transport = Transport::kTcp;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7653;
  std::string path;

  /// Throws ConfigError when the text is not host:port or unix:/path.
  static Endpoint parse(std::string_view text);
  /// BIOHUB_ADDR if set, otherwise the default.
  static Endpoint from_env();

  std::string str() const;
};

/// Owning wrapper around a connected stream socket.
class Socket
{
public:
  Socket() = default;
  explicit Socket(int fd) noexcept
  : fd_(fd) {}
  ~Socket();
  Socket(Socket && other) noexcept;
  Socket & operator=(Socket && other) noexcept;
  Socket(const Socket &) = delete;
  Socket & operator=(const Socket &) = delete;

  /// Throws IoError when the endpoint is unreachable.
  static Socket connect(const Endpoint & ep);

  int fd() const noexcept {return fd_;}
  bool valid() const noexcept {return fd_ >= 0;}

  /// Writes every byte or throws IoError.
  void send_all(std::span<const std::uint8_t> bytes) const;
  /// Reads up to `buf.size()` bytes; 0 means orderly shutdown. Throws IoError.
  std::size_t recv_some(std::span<std::uint8_t> buf) const;
  /// Waits until readable or the timeout elapses.
  bool wait_readable(std::chrono::milliseconds timeout) const;
  /// Unblocks any thread waiting on this socket.
  void shutdown() const noexcept;
  void close() noexcept;

private:
  int fd_ = -1;
};

/// Listening socket; `port` 0 binds an ephemeral port.
class Listener
{
public:
  /// Throws IoError when the endpoint cannot be bound.
  explicit Listener(const Endpoint & ep);
  ~Listener();
  Listener(const Listener &) = delete;
  Listener & operator=(const Listener &) = delete;

  /// The endpoint actually bound (resolves port 0).
  const Endpoint & endpoint() const noexcept {return bound_;}
  /// Blocks until a connection arrives. Throws IoError once close() was called.
  Socket accept();
  void close() noexcept;

private:
  int fd_ = -1;
  Endpoint bound_;
};

}  // namespace biohub

#endif  // BIOHUB__ENDPOINT_HPP_
