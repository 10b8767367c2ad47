#pragma once

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <thread>
#include <utility>

#include "hermes/bytes.hpp"
#include "hermes/error.hpp"

namespace hermes::net {

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string errno_text(const std::string& what) { return what + ": " + std::strerror(errno); }

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  std::string port;
};

// "host:port", "[v6]:port" or ":port".
inline Endpoint parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 == s.size()) throw ConfigError("address '" + s + "' needs host:port");
  std::string host = s.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return {host.empty() ? "0.0.0.0" : host, s.substr(colon + 1)};
}

namespace detail {

struct AddrInfo {
  addrinfo* list = nullptr;
  ~AddrInfo() {
    if (list) freeaddrinfo(list);
  }
};

inline void resolve(const Endpoint& ep, bool passive, AddrInfo& out) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  const int rc = getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &out.list);
  if (rc != 0) throw IoError("cannot resolve " + ep.host + ":" + ep.port + ": " + gai_strerror(rc));
}

}  // namespace detail

inline Fd listen_tcp(const std::string& address, int backlog = 64) {
  detail::AddrInfo ai;
  detail::resolve(parse_endpoint(address), true, ai);
  for (auto* p = ai.list; p; p = p->ai_next) {
    Fd fd(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
    if (!fd) continue;
    const int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd.get(), p->ai_addr, p->ai_addrlen) == 0 && ::listen(fd.get(), backlog) == 0) return fd;
  }
  throw IoError(errno_text("cannot listen on " + address));
}

inline std::uint16_t local_port(const Fd& fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&ss), &len) != 0) throw IoError(errno_text("getsockname"));
  if (ss.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
  return 0;
}

inline void set_nodelay(const Fd& fd) {
  const int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

// Connects, retrying while nobody is listening yet.
inline Fd connect_tcp(const std::string& address, std::chrono::milliseconds patience = std::chrono::milliseconds(5000)) {
  const auto ep = parse_endpoint(address);
  const auto deadline = std::chrono::steady_clock::now() + patience;
  for (;;) {
    detail::AddrInfo ai;
    detail::resolve(ep, false, ai);
    for (auto* p = ai.list; p; p = p->ai_next) {
      Fd fd(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
      if (!fd) continue;
      if (::connect(fd.get(), p->ai_addr, p->ai_addrlen) == 0) {
        set_nodelay(fd);
        return fd;
      }
    }
    if (std::chrono::steady_clock::now() >= deadline) throw IoError(errno_text("cannot connect to " + address));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

inline Fd listen_unix(const std::string& path) {
  sockaddr_un addr{};
  if (path.size() >= sizeof addr.sun_path) throw ConfigError("socket path too long: " + path);
  addr.sun_family = AF_UNIX;
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  ::unlink(path.c_str());
  Fd fd(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd || ::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd.get(), 8) != 0) {
    throw IoError(errno_text("cannot listen on " + path));
  }
  return fd;
}

inline Fd connect_unix(const std::string& path) {
  sockaddr_un addr{};
  if (path.size() >= sizeof addr.sun_path) throw ConfigError("socket path too long: " + path);
  addr.sun_family = AF_UNIX;
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  Fd fd(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd || ::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw IoError(errno_text("cannot connect to " + path));
  }
  return fd;
}

// Accepts one connection if one arrives within `timeout`.
inline Fd accept_for(const Fd& listener, std::chrono::milliseconds timeout) {
  pollfd p{listener.get(), POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc <= 0) return Fd();
  Fd fd(::accept4(listener.get(), nullptr, nullptr, SOCK_CLOEXEC));
  if (fd) set_nodelay(fd);
  return fd;
}

inline void send_all(const Fd& fd, ByteView data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd.get(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("send"));
    }
    data = data.subspan(static_cast<std::size_t>(n));
  }
}

// Reads whatever is available; an empty result means the peer closed.
inline Bytes recv_some(const Fd& fd, std::size_t max = 1 << 16) {
  Bytes buf(max);
  for (;;) {
    const ssize_t n = ::recv(fd.get(), buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("recv"));
    }
    buf.resize(static_cast<std::size_t>(n));
    return buf;
  }
}

inline Bytes recv_all(const Fd& fd) {
  Bytes out;
  for (;;) {
    Bytes part = recv_some(fd);
    if (part.empty()) return out;
    append(out, part);
  }
}

}  // namespace hermes::net
