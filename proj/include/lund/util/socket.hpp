#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lund::net {

using Clock = std::chrono::steady_clock;

// "host:port", "unix:/path" or an absolute socket path.
struct Address {
  bool is_unix = false;
  std::string host;
  std::uint16_t port = 0;
  std::string path;
};

// Throws std::invalid_argument on malformed addresses.
Address parse_address(std::string_view text);

// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();
  // Wakes any thread blocked on this socket.
  void shutdown();

 private:
  int fd_ = -1;
};

// Connects before `timeout` elapses. Throws Error(Unreachable).
Socket connect_to(const Address& address, std::chrono::milliseconds timeout);

// Loopback TCP listener; port 0 picks an ephemeral port.
Socket listen_tcp(const std::string& host, std::uint16_t port, std::uint16_t* bound_port);

// Writes everything before the deadline. Returns false on timeout; throws
// Error(Unreachable) when the peer is gone.
bool write_all(int fd, std::string_view data, Clock::time_point deadline);

// Frame = 4-byte big-endian length + payload. Bytes of a partially received
// frame are kept, so a timed-out read can be resumed later.
class FrameReader {
 public:
  static constexpr std::uint32_t kMaxFrame = 64u << 20;

  // nullopt on timeout. Throws Error(Unreachable) on EOF or socket error and
  // Error(MalformedResponse) on an oversized length prefix.
  std::optional<std::string> read(int fd, Clock::time_point deadline);
  bool has_partial() const { return !buffer_.empty(); }

 private:
  std::optional<std::string> take();
  std::string buffer_;
};

std::string encode_frame(std::string_view payload);

}  // namespace lund::net
