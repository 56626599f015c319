#include "lund/util/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "lund/error.hpp"

namespace lund::net {

namespace {

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  if (left <= 0) return 0;
  return left > INT32_MAX ? INT32_MAX : static_cast<int>(left);
}

[[noreturn]] void unreachable(const std::string& what) {
  throw Error(ErrorKind::Unreachable, what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd, bool on) {
  int flags = ::fcntl(fd, F_GETFL, 0);
  flags = on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK);
  ::fcntl(fd, F_SETFL, flags);
}

}  // namespace

Address parse_address(std::string_view text) {
  Address a;
  if (text.starts_with("unix:")) {
    a.is_unix = true;
    a.path = std::string(text.substr(5));
  } else if (text.starts_with("/")) {
    a.is_unix = true;
    a.path = std::string(text);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
      throw std::invalid_argument("address must be host:port or a socket path: " +
                                  std::string(text));
    a.host = std::string(text.substr(0, colon));
    if (a.host.size() > 2 && a.host.front() == '[' && a.host.back() == ']')
      a.host = a.host.substr(1, a.host.size() - 2);
    const std::string port(text.substr(colon + 1));
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(port, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != port.size() || value == 0 || value > 65535)
      throw std::invalid_argument("bad port in address: " + std::string(text));
    a.port = static_cast<std::uint16_t>(value);
  }
  if (a.is_unix && (a.path.empty() || a.path.size() >= sizeof(sockaddr_un{}.sun_path)))
    throw std::invalid_argument("bad socket path: " + std::string(text));
  return a;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

namespace {

// Non-blocking connect bounded by the deadline.
bool try_connect(int fd, const sockaddr* addr, socklen_t len, Clock::time_point deadline) {
  set_nonblocking(fd, true);
  if (::connect(fd, addr, len) == 0) return true;
  if (errno != EINPROGRESS) return false;
  pollfd p{fd, POLLOUT, 0};
  const int rc = ::poll(&p, 1, remaining_ms(deadline));
  if (rc <= 0) {
    errno = rc == 0 ? ETIMEDOUT : errno;
    return false;
  }
  int err = 0;
  socklen_t err_len = sizeof err;
  ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &err_len);
  if (err != 0) {
    errno = err;
    return false;
  }
  return true;
}

}  // namespace

Socket connect_to(const Address& address, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  if (address.is_unix) {
    Socket s(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) unreachable("socket");
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    std::memcpy(addr.sun_path, address.path.c_str(), address.path.size() + 1);
    if (!try_connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr, deadline))
      unreachable("connect " + address.path);
    return s;
  }

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(address.port);
  if (const int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &found); rc != 0)
    throw Error(ErrorKind::Unreachable,
                "resolve " + address.host + ": " + ::gai_strerror(rc));
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    if (try_connect(s.fd(), ai->ai_addr, ai->ai_addrlen, deadline)) {
      ::freeaddrinfo(found);
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(found);
  throw Error(ErrorKind::Unreachable,
              "connect " + address.host + ":" + port + ": " + last_error);
}

Socket listen_tcp(const std::string& host, std::uint16_t port, std::uint16_t* bound_port) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) unreachable("socket");
  const int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::invalid_argument("listen host must be an IPv4 literal: " + host);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) unreachable("bind");
  if (::listen(s.fd(), 64) != 0) unreachable("listen");
  if (bound_port) {
    socklen_t len = sizeof addr;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
  }
  return s;
}

bool write_all(int fd, std::string_view data, Clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    pollfd p{fd, POLLOUT, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc == 0) return false;
    if (rc < 0) {
      if (errno == EINTR) continue;
      unreachable("poll");
    }
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      unreachable("send");
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::string encode_frame(std::string_view payload) {
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out.append(payload);
  return out;
}

std::optional<std::string> FrameReader::take() {
  if (buffer_.size() < 4) return std::nullopt;
  const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data());
  const std::uint32_t n = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
                          (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  if (n > kMaxFrame)
    throw Error(ErrorKind::MalformedResponse, "frame length exceeds limit", std::to_string(n));
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  std::string payload = buffer_.substr(4, n);
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  return payload;
}

std::optional<std::string> FrameReader::read(int fd, Clock::time_point deadline) {
  char chunk[16384];
  while (true) {
    if (auto frame = take()) return frame;
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc == 0) return std::nullopt;
    if (rc < 0) {
      if (errno == EINTR) continue;
      unreachable("poll");
    }
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, MSG_DONTWAIT);
    if (n == 0) throw Error(ErrorKind::Unreachable, "connection closed by peer");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
      unreachable("recv");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace lund::net
