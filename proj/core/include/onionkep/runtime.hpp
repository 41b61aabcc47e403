#pragma once

// Directory, relay and client processes on top of the stream transport.
//
// Relay links open with a hello frame (TLV tag 0x40 carrying the sender's
// name) so both ends agree on link names; every later frame is one encoded
// cell. A relay processes cells under one state lock, which keeps each
// circuit's cells in arrival order.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "onionkep/directory.hpp"
#include "onionkep/protocol.hpp"
#include "onionkep/simnet.hpp"
#include "onionkep/stream.hpp"

namespace onionkep::net {

inline constexpr std::uint8_t kHelloTag = 0x40;

void dir_register(const Endpoint& directory, const NodeDescriptor& desc);
NodeDescriptor dir_lookup(const Endpoint& directory, const std::string& name);
std::vector<NodeDescriptor> dir_list(const Endpoint& directory);

class DirectoryServer {
 public:
  DirectoryServer(Directory& directory, const Endpoint& listen);
  ~DirectoryServer();

  DirectoryServer(const DirectoryServer&) = delete;
  DirectoryServer& operator=(const DirectoryServer&) = delete;

  Endpoint endpoint() const { return listener_.endpoint(); }
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();

  Directory& directory_;
  Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> workers_;
};

struct NodeServerConfig {
  std::string name;
  nikep::SystemParams params;
  nikep::KeyPair keys;
  Endpoint listen{"127.0.0.1", 0};
  Endpoint directory;
  // Address published in the descriptor; defaults to the bound endpoint.
  std::string advertise;
  bool exit_echo = true;
};

class NodeServer {
 public:
  explicit NodeServer(NodeServerConfig config);
  ~NodeServer();

  NodeServer(const NodeServer&) = delete;
  NodeServer& operator=(const NodeServer&) = delete;

  Endpoint endpoint() const { return listener_.endpoint(); }

  // Registers with the directory and starts accepting links.
  void start();
  void stop();
  void wait();

  void on_delivery(std::function<void(const Delivery&)> callback);
  std::vector<Delivery> deliveries() const;
  std::vector<protocol::TearDown> teardowns() const;
  protocol::NodeState state() const;

 private:
  struct Peer {
    std::string name;
    Connection conn;
  };

  void accept_loop();
  void serve(std::shared_ptr<Peer> peer, bool expect_hello);
  void spawn_reader(std::shared_ptr<Peer> peer, bool expect_hello);
  std::shared_ptr<Peer> link_to(const std::string& name);
  void execute(const protocol::Actions& actions);
  void link_down(const std::string& name, const std::shared_ptr<Peer>& peer);

  NodeServerConfig config_;
  Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  mutable std::mutex state_mutex_;
  protocol::NodeState state_;
  std::vector<Delivery> deliveries_;
  std::vector<protocol::TearDown> teardowns_;
  std::function<void(const Delivery&)> callback_;

  std::mutex peers_mutex_;
  std::map<std::string, std::shared_ptr<Peer>> peers_;
  std::vector<std::shared_ptr<Peer>> all_peers_;
  std::vector<std::thread> readers_;
};

struct StreamClientConfig {
  std::string name = "client";
  nikep::SystemParams params;
  Endpoint directory;
  std::chrono::milliseconds timeout{10'000};
  // Flips a bit in the first CREATED answer before checking it.
  bool corrupt_created = false;
};

class StreamClient {
 public:
  StreamClient(StreamClientConfig config, nikep::RandomSource& rng);

  // Connects to the entry relay and telescopes along `path`. Returns the
  // final state, Ready or Failed. Throws NotFound for unknown relays.
  const protocol::CircuitState& build(std::uint32_t circ_id, const std::vector<std::string>& path);

  // Sends one DATA frame and waits for the exit's answer.
  Bytes round_trip(std::uint16_t stream_id, ByteView data);

  const protocol::CircuitState& circuit() const { return state_; }
  void close();

 private:
  protocol::Cell next_cell();
  void send(const protocol::Actions& actions);

  StreamClientConfig config_;
  nikep::RandomSource& rng_;
  Connection conn_;
  protocol::CircuitState state_;
};

}  // namespace onionkep::net
