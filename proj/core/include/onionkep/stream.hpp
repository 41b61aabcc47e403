#pragma once

// Length-framed messages over TCP: frame = length(4, big-endian) ‖ body.
// Cells and directory requests both travel this way.

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "onionkep/bytes.hpp"

namespace onionkep::net {

inline constexpr std::size_t kMaxFrameBytes = 70'000;

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// Parses "host:port"; throws InvalidArgument.
Endpoint parse_endpoint(const std::string& text);

class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  ~Connection();

  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  bool is_open() const { return fd_ >= 0; }

  // Safe to call from several threads; frames never interleave.
  // Throws FrameTooLarge or ConnectionLost.
  void send_frame(ByteView body);
  // nullopt on a clean close between frames. Throws FrameTooLarge for an
  // announced length over the limit, ConnectionLost on a mid-frame close.
  std::optional<Bytes> recv_frame();

  // recv_frame throws ConnectionLost when nothing arrives for this long.
  void set_receive_timeout(std::chrono::milliseconds timeout);

  // Unblocks a reader in another thread.
  void shutdown();
  void close();

 private:
  int fd_ = -1;
  std::mutex write_mutex_;
};

Connection connect_to(const Endpoint& endpoint);

class Listener {
 public:
  // Port 0 picks a free port; see port().
  explicit Listener(const Endpoint& endpoint);
  ~Listener();

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  Endpoint endpoint() const { return {host_, port_}; }

  // nullopt once the listener has been shut down.
  std::optional<Connection> accept();
  void shutdown();

 private:
  int fd_ = -1;
  std::string host_;
  std::uint16_t port_ = 0;
};

// Sends one request frame and waits for the reply on a fresh connection.
Bytes request_response(const Endpoint& endpoint, ByteView request);

}  // namespace onionkep::net
