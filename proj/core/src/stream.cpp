#include "onionkep/stream.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"

namespace onionkep::net {

namespace {

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ConnectionLost, std::strerror(errno));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

// Returns bytes read; fewer than `size` only on EOF.
std::size_t read_all(int fd, std::uint8_t* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n == 0) break;
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == ECONNRESET || errno == EBADF || errno == ENOTCONN) break;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error(ErrorCode::ConnectionLost, "receive timed out");
      throw Error(ErrorCode::ConnectionLost, std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
  return got;
}

sockaddr_in resolve(const Endpoint& endpoint) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (::getaddrinfo(endpoint.host.c_str(), nullptr, &hints, &found) != 0 || found == nullptr) {
    throw Error(ErrorCode::ConnectionLost, "cannot resolve " + endpoint.host);
  }
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);
  addr.sin_port = htons(endpoint.port);
  return addr;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected host:port, got '" + text + "'");
  }
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("junk");
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in '" + text + "'");
  }
  if (port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range in '" + text + "'");
  return Endpoint{text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

Connection::~Connection() { close(); }

Connection::Connection(Connection&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Connection::send_frame(ByteView body) {
  if (body.size() > kMaxFrameBytes) {
    throw Error(ErrorCode::FrameTooLarge, std::to_string(body.size()) + " byte frame");
  }
  if (fd_ < 0) throw Error(ErrorCode::ConnectionLost, "connection closed");
  Bytes frame;
  frame.reserve(4 + body.size());
  onioncrypt::put_u32(frame, static_cast<std::uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  std::lock_guard lock(write_mutex_);
  write_all(fd_, frame.data(), frame.size());
}

std::optional<Bytes> Connection::recv_frame() {
  if (fd_ < 0) return std::nullopt;
  std::uint8_t header[4];
  const std::size_t got = read_all(fd_, header, sizeof(header));
  if (got == 0) return std::nullopt;
  if (got < sizeof(header)) throw Error(ErrorCode::ConnectionLost, "closed inside a frame header");
  const std::uint32_t length = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                               (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (length > kMaxFrameBytes) {
    throw Error(ErrorCode::FrameTooLarge, "peer announced a " + std::to_string(length) + " byte frame");
  }
  Bytes body(length);
  if (read_all(fd_, body.data(), body.size()) < length) {
    throw Error(ErrorCode::ConnectionLost, "closed inside a frame");
  }
  return body;
}

void Connection::set_receive_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void Connection::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Connection::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Connection connect_to(const Endpoint& endpoint) {
  const sockaddr_in addr = resolve(endpoint);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::ConnectionLost, std::strerror(errno));
  Connection conn(fd);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(ErrorCode::ConnectionLost, "connect to " + endpoint.to_string() + ": " + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return conn;
}

Listener::Listener(const Endpoint& endpoint) : host_(endpoint.host) {
  sockaddr_in addr = resolve(endpoint);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoError, std::strerror(errno));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 64) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::IoError, "listen on " + endpoint.to_string() + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<Connection> Listener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Connection(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return std::nullopt;
  }
}

void Listener::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Bytes request_response(const Endpoint& endpoint, ByteView request) {
  Connection conn = connect_to(endpoint);
  conn.send_frame(request);
  auto reply = conn.recv_frame();
  if (!reply) throw Error(ErrorCode::ConnectionLost, "no reply from " + endpoint.to_string());
  return std::move(*reply);
}

}  // namespace onionkep::net
