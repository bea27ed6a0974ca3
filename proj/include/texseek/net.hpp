#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace texseek::net {

/// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();
  void close();
  /// Unblocks any thread reading from this socket.
  void shutdown();

  void send_all(std::span<const std::uint8_t> data);
  /// Fills buf completely. Returns false on a clean EOF before the first
  /// byte; throws ProtocolError("short read") on EOF part way through.
  bool recv_exact(std::span<std::uint8_t> buf);

  void set_timeout(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

Socket connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

class Listener {
 public:
  /// port 0 picks an ephemeral port.
  Listener(const std::string& host, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  /// Blocks; returns nullopt once close() has been called.
  std::optional<Socket> accept();
  void close();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

}  // namespace texseek::net
