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

#include "biohub/endpoint.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>

#include "biohub/error.hpp"

namespace biohub
{

namespace
{

std::string errno_text(const std::string & what)
{
  return what + ": " + std::strerror(errno);
}

void set_nodelay(int fd)
{
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_un unix_address(const std::string & path)
{
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    throw ConfigError("unix socket path too long: " + path);
  }
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text)
{
  Endpoint ep;
  if (text.starts_with("unix:")) {
    ep.transport = Transport::kUnix;
    ep.path = std::string(text.substr(5));
    if (ep.path.empty()) {
      throw ConfigError("empty unix socket path");
    }
    return ep;
  }
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("endpoint must be host:port or unix:/path, got '" + std::string(text) + "'");
  }
  ep.host = std::string(text.substr(0, colon));
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535) {
    throw ConfigError("bad port in endpoint '" + std::string(text) + "'");
  }
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

Endpoint Endpoint::from_env()
{
  if (const char * env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') {
    return parse(env);
  }
  return parse(kDefaultEndpoint);
}

std::string Endpoint::str() const
{
  if (transport == Transport::kUnix) {
    return "unix:" + path;
  }
  return host + ":" + std::to_string(port);
}

Socket::~Socket() {close();}

Socket::Socket(Socket && other) noexcept
: fd_(std::exchange(other.fd_, -1)) {}

Socket & Socket::operator=(Socket && other) noexcept
{
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket Socket::connect(const Endpoint & ep)
{
  if (ep.transport == Endpoint::Transport::kUnix) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) {
      throw IoError(errno_text("socket"));
    }
    Socket s(fd);
    auto addr = unix_address(ep.path);
    if (::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
      throw IoError(errno_text("connect " + ep.str()));
    }
    return s;
  }
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo * res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw IoError("resolve " + ep.str() + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo * ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      set_nodelay(fd);
      return Socket(fd);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw IoError("connect " + ep.str() + ": " + last_error);
}

void Socket::send_all(std::span<const std::uint8_t> bytes) const
{
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      throw IoError(errno_text("send"));
    }
    bytes = bytes.subspan(static_cast<std::size_t>(n));
  }
}

std::size_t Socket::recv_some(std::span<std::uint8_t> buf) const
{
  for (;;) {
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n >= 0) {
      return static_cast<std::size_t>(n);
    }
    if (errno != EINTR) {
      throw IoError(errno_text("recv"));
    }
  }
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) const
{
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(std::max<std::int64_t>(0, timeout.count())));
  if (rc < 0) {
    if (errno == EINTR) {
      return false;
    }
    throw IoError(errno_text("poll"));
  }
  return rc > 0;
}

void Socket::shutdown() const noexcept
{
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
  }
}

void Socket::close() noexcept
{
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Listener::Listener(const Endpoint & ep)
: bound_(ep)
{
  if (ep.transport == Endpoint::Transport::kUnix) {
    fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) {
      throw IoError(errno_text("socket"));
    }
    ::unlink(ep.path.c_str());
    auto addr = unix_address(ep.path);
    if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
      const auto msg = errno_text("bind " + ep.str());
      ::close(fd_);
      throw IoError(msg);
    }
  } else {
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) {
      throw IoError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw IoError("bind " + ep.str() + ": host must be an IPv4 address");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0) {
      const auto msg = errno_text("bind " + ep.str());
      ::close(fd_);
      throw IoError(msg);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    bound_.port = ntohs(addr.sin_port);
  }
  if (::listen(fd_, 64) != 0) {
    const auto msg = errno_text("listen " + ep.str());
    ::close(fd_);
    throw IoError(msg);
  }
}

Listener::~Listener()
{
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
  }
  if (bound_.transport == Endpoint::Transport::kUnix) {
    ::unlink(bound_.path.c_str());
  }
}

Socket Listener::accept()
{
  for (;;) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      if (bound_.transport == Endpoint::Transport::kTcp) {
        set_nodelay(fd);
      }
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) {
      continue;
    }
    throw IoError(errno_text("accept"));
  }
}

void Listener::close() noexcept
{
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
  }
}

}  // namespace biohub
