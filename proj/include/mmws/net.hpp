#pragma once

// Thin POSIX socket layer: endpoints, listeners, blocking dial with retry,
// exact-length reads with deadlines, and length-prefixed JSON control frames
// used by the launcher handshake.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmws/error.hpp"

namespace mmws {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port"; the host part may itself be a name.
inline Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw LaunchError("malformed endpoint '" + text + "' (want host:port)");
  const std::string port_part = text.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_part, &used);
    if (used != port_part.size()) throw std::invalid_argument(port_part);
  } catch (const std::exception&) {
    throw LaunchError("malformed endpoint '" + text + "' (bad port)");
  }
  if (port > 65535) throw LaunchError("malformed endpoint '" + text + "' (port out of range)");
  return Endpoint{text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

/// Owning file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

using Clock = std::chrono::steady_clock;

/// Monotonic elapsed seconds; resolution well under 1 ms.
inline double wall_time() {
  return std::chrono::duration<double>(Clock::now().time_since_epoch()).count();
}

namespace detail {

inline std::string errno_text() { return std::strerror(errno); }

// Sockets must not leak into exec'd children: a child holding a copy of a
// connection defeats EOF-based peer-death detection.
inline void set_cloexec(int fd) { ::fcntl(fd, F_SETFD, FD_CLOEXEC); }

inline sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0 || result == nullptr)
    throw TransportError("cannot resolve " + ep.str() + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, result->ai_addr, sizeof(addr));
  ::freeaddrinfo(result);
  return addr;
}

// Waits until fd is readable or the (optional) deadline passes.
inline void wait_readable(int fd, std::optional<Clock::time_point> deadline) {
  for (;;) {
    int timeout_ms = -1;
    if (deadline) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now());
      if (left.count() <= 0)
        throw TimeoutError("deadlock-suspected: no message arrived before the receive timeout");
      timeout_ms = static_cast<int>(left.count()) + 1;
    }
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc > 0) return;
    if (rc == 0)
      throw TimeoutError("deadlock-suspected: no message arrived before the receive timeout");
    if (errno != EINTR) throw TransportError(std::string("poll: ") + errno_text());
  }
}

}  // namespace detail

/// Bound, listening TCP socket. Port 0 picks an ephemeral port.
class Listener {
 public:
  explicit Listener(const Endpoint& ep, int backlog = 64) {
    const sockaddr_in want = detail::resolve(ep);
    fd_ = UniqueFd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd_.valid()) throw TransportError(std::string("socket: ") + detail::errno_text());
    detail::set_cloexec(fd_.get());
    const int one = 1;
    ::setsockopt(fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd_.get(), reinterpret_cast<const sockaddr*>(&want), sizeof(want)) != 0)
      throw TransportError("bind " + ep.str() + ": " + detail::errno_text());
    if (::listen(fd_.get(), backlog) != 0)
      throw TransportError("listen " + ep.str() + ": " + detail::errno_text());
    sockaddr_in got{};
    socklen_t len = sizeof(got);
    ::getsockname(fd_.get(), reinterpret_cast<sockaddr*>(&got), &len);
    port_ = ntohs(got.sin_port);
  }

  std::uint16_t port() const { return port_; }

  UniqueFd accept(std::optional<Clock::time_point> deadline = std::nullopt) {
    detail::wait_readable(fd_.get(), deadline);
    const int client = ::accept(fd_.get(), nullptr, nullptr);
    if (client < 0) throw TransportError(std::string("accept: ") + detail::errno_text());
    detail::set_cloexec(client);
    const int one = 1;
    ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return UniqueFd(client);
  }

 private:
  UniqueFd fd_;
  std::uint16_t port_ = 0;
};

/// Blocking connect, retrying refusals until the deadline (peers race at startup).
inline UniqueFd dial(const Endpoint& ep,
                     std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  const sockaddr_in addr = detail::resolve(ep);
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    UniqueFd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) throw TransportError(std::string("socket: ") + detail::errno_text());
    detail::set_cloexec(fd.get());
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      const int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return fd;
    }
    if (Clock::now() >= deadline)
      throw TransportError("connect " + ep.str() + ": " + detail::errno_text());
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

/// Writes the whole buffer; blocks if the peer is slow to drain.
inline void write_all(int fd, const void* data, std::size_t len) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (len > 0) {
    const ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("send: ") + detail::errno_text());
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

/// Reads exactly len bytes; EOF or a passed deadline is an error.
inline void read_exact(int fd, void* data, std::size_t len,
                       std::optional<Clock::time_point> deadline = std::nullopt) {
  auto* p = static_cast<std::uint8_t*>(data);
  while (len > 0) {
    detail::wait_readable(fd, deadline);
    const ssize_t n = ::recv(fd, p, len, 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("recv: ") + detail::errno_text());
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

/// Local address of a connected socket, as seen by the peer's network.
inline std::string local_host_of(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw TransportError(std::string("getsockname: ") + detail::errno_text());
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return buf;
}

// Control-plane frames (launcher handshake only): u32 LE length + JSON text.
inline void send_ctrl(int fd, const nlohmann::json& msg) {
  const std::string text = msg.dump();
  std::uint8_t prefix[4];
  const auto n = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) prefix[i] = static_cast<std::uint8_t>(n >> (8 * i));
  write_all(fd, prefix, 4);
  write_all(fd, text.data(), text.size());
}

inline nlohmann::json recv_ctrl(int fd, std::optional<Clock::time_point> deadline = std::nullopt) {
  std::uint8_t prefix[4];
  read_exact(fd, prefix, 4, deadline);
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(prefix[i]) << (8 * i);
  if (n > (1u << 20)) throw ProtocolError("oversized control frame");
  std::string text(n, '\0');
  read_exact(fd, text.data(), n, deadline);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("bad control frame: ") + e.what());
  }
}

}  // namespace mmws
