#include "onionkep/runtime.hpp"

#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"

namespace onionkep::net {

using protocol::Action;
using protocol::Actions;

namespace {

NodeDescriptor single(std::vector<NodeDescriptor> found) {
  if (found.size() != 1) throw Error(ErrorCode::MalformedPayload, "expected one descriptor");
  return std::move(found.front());
}

Bytes hello(const std::string& name) {
  Bytes out;
  onioncrypt::append_tlv(out, kHelloTag, to_bytes(name));
  return out;
}

std::string parse_hello(ByteView frame) {
  const auto records = onioncrypt::parse_tlv(frame, ErrorCode::MalformedPayload);
  if (records.size() != 1 || records.front().tag != kHelloTag || records.front().value.empty()) {
    throw Error(ErrorCode::MalformedPayload, "link did not open with a hello");
  }
  return to_string(records.front().value);
}

void join_all(std::mutex& mutex, std::vector<std::thread>& threads) {
  for (;;) {
    std::vector<std::thread> batch;
    {
      std::lock_guard lock(mutex);
      if (threads.empty()) return;
      batch.swap(threads);
    }
    for (auto& t : batch) {
      if (t.joinable()) t.join();
    }
  }
}

}  // namespace

void dir_register(const Endpoint& directory, const NodeDescriptor& desc) {
  parse_directory_response(request_response(directory, make_register_request(desc)));
}

NodeDescriptor dir_lookup(const Endpoint& directory, const std::string& name) {
  return single(parse_directory_response(request_response(directory, make_lookup_request(name))));
}

std::vector<NodeDescriptor> dir_list(const Endpoint& directory) {
  return parse_directory_response(request_response(directory, make_list_request()));
}

// ---------------------------------------------------------------------------

DirectoryServer::DirectoryServer(Directory& directory, const Endpoint& listen)
    : directory_(directory), listener_(listen) {}

DirectoryServer::~DirectoryServer() { stop(); }

void DirectoryServer::start() { acceptor_ = std::thread([this] { accept_loop(); }); }

void DirectoryServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void DirectoryServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(mutex_);
    for (auto& conn : connections_) conn->shutdown();
  }
  join_all(mutex_, workers_);
}

void DirectoryServer::accept_loop() {
  while (!stopping_) {
    auto accepted = listener_.accept();
    if (!accepted) break;
    auto conn = std::make_shared<Connection>(std::move(*accepted));
    std::lock_guard lock(mutex_);
    if (stopping_) break;
    connections_.push_back(conn);
    workers_.emplace_back([this, conn] {
      try {
        while (auto request = conn->recv_frame()) {
          conn->send_frame(handle_directory_request(directory_, *request));
        }
      } catch (const Error&) {
        // Requests are independent; a broken connection affects nobody else.
      }
    });
  }
}

// ---------------------------------------------------------------------------

NodeServer::NodeServer(NodeServerConfig config)
    : config_(std::move(config)),
      listener_(config_.listen),
      state_(protocol::make_node(config_.name, config_.params, config_.keys)) {
  if (config_.advertise.empty()) config_.advertise = listener_.endpoint().to_string();
}

NodeServer::~NodeServer() { stop(); }

void NodeServer::start() {
  dir_register(config_.directory,
               make_descriptor(config_.name, config_.advertise, config_.params, config_.keys.pub));
  acceptor_ = std::thread([this] { accept_loop(); });
}

void NodeServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void NodeServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(peers_mutex_);
    for (auto& peer : all_peers_) peer->conn.shutdown();
  }
  join_all(peers_mutex_, readers_);
}

void NodeServer::on_delivery(std::function<void(const Delivery&)> callback) {
  std::lock_guard lock(state_mutex_);
  callback_ = std::move(callback);
}

std::vector<Delivery> NodeServer::deliveries() const {
  std::lock_guard lock(state_mutex_);
  return deliveries_;
}

std::vector<protocol::TearDown> NodeServer::teardowns() const {
  std::lock_guard lock(state_mutex_);
  return teardowns_;
}

protocol::NodeState NodeServer::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

void NodeServer::accept_loop() {
  while (!stopping_) {
    auto accepted = listener_.accept();
    if (!accepted) break;
    auto peer = std::make_shared<Peer>(Peer{std::string{}, std::move(*accepted)});
    spawn_reader(std::move(peer), true);
  }
}

void NodeServer::spawn_reader(std::shared_ptr<Peer> peer, bool expect_hello) {
  std::lock_guard lock(peers_mutex_);
  if (stopping_) {
    peer->conn.shutdown();
    return;
  }
  all_peers_.push_back(peer);
  readers_.emplace_back([this, peer, expect_hello] { serve(peer, expect_hello); });
}

void NodeServer::serve(std::shared_ptr<Peer> peer, bool expect_hello) {
  try {
    if (expect_hello) {
      auto first = peer->conn.recv_frame();
      if (!first) return;
      peer->name = parse_hello(*first);
      std::lock_guard lock(peers_mutex_);
      peers_[peer->name] = peer;
    }
    while (auto frame = peer->conn.recv_frame()) {
      const protocol::Cell cell = onioncrypt::decode_cell(*frame);
      Actions actions;
      {
        std::lock_guard lock(state_mutex_);
        auto [next, out] = protocol::node_handle_cell(state_, peer->name, cell);
        state_ = std::move(next);
        actions = std::move(out);
      }
      execute(actions);
    }
  } catch (const Error&) {
    // Falls through to the link-down handling below.
  }
  if (!stopping_ && !peer->name.empty()) link_down(peer->name, peer);
}

std::shared_ptr<NodeServer::Peer> NodeServer::link_to(const std::string& name) {
  {
    std::lock_guard lock(peers_mutex_);
    if (auto it = peers_.find(name); it != peers_.end()) return it->second;
  }
  const NodeDescriptor desc = dir_lookup(config_.directory, name);
  auto peer = std::make_shared<Peer>(Peer{name, connect_to(parse_endpoint(desc.address))});
  peer->conn.send_frame(hello(config_.name));
  {
    std::lock_guard lock(peers_mutex_);
    if (auto it = peers_.find(name); it != peers_.end()) {
      // Lost a race with another thread opening the same link.
      return it->second;
    }
    peers_[name] = peer;
  }
  spawn_reader(peer, false);
  return peer;
}

void NodeServer::link_down(const std::string& name, const std::shared_ptr<Peer>& peer) {
  {
    std::lock_guard lock(peers_mutex_);
    auto it = peers_.find(name);
    if (it != peers_.end() && (!peer || it->second == peer)) peers_.erase(it);
  }
  Actions actions;
  {
    std::lock_guard lock(state_mutex_);
    auto [next, out] = protocol::node_handle_link_down(state_, name);
    state_ = std::move(next);
    actions = std::move(out);
  }
  execute(actions);
}

void NodeServer::execute(const Actions& actions) {
  for (const Action& action : actions) {
    if (const auto* send = std::get_if<protocol::SendCell>(&action)) {
      try {
        link_to(send->link)->conn.send_frame(onioncrypt::encode_cell(send->cell));
      } catch (const Error&) {
        if (!stopping_) link_down(send->link, nullptr);
      }
    } else if (const auto* local = std::get_if<protocol::DeliverLocal>(&action)) {
      const Delivery delivery{config_.name, local->circ_id, local->stream_id, local->data};
      std::function<void(const Delivery&)> callback;
      Actions reply;
      {
        std::lock_guard lock(state_mutex_);
        deliveries_.push_back(delivery);
        callback = callback_;
        if (config_.exit_echo) {
          reply = protocol::node_send_data(state_, local->link, local->circ_id, local->stream_id,
                                           local->data);
        }
      }
      if (callback) callback(delivery);
      execute(reply);
    } else if (const auto* down = std::get_if<protocol::TearDown>(&action)) {
      std::lock_guard lock(state_mutex_);
      teardowns_.push_back(*down);
    }
  }
}

// ---------------------------------------------------------------------------

StreamClient::StreamClient(StreamClientConfig config, nikep::RandomSource& rng)
    : config_(std::move(config)), rng_(rng) {}

void StreamClient::send(const Actions& actions) {
  for (const Action& action : actions) {
    if (const auto* send = std::get_if<protocol::SendCell>(&action)) {
      conn_.send_frame(onioncrypt::encode_cell(send->cell));
    }
  }
}

protocol::Cell StreamClient::next_cell() {
  auto frame = conn_.recv_frame();
  if (!frame) throw Error(ErrorCode::ConnectionLost, "entry relay closed the link");
  return onioncrypt::decode_cell(*frame);
}

const protocol::CircuitState& StreamClient::build(std::uint32_t circ_id,
                                                  const std::vector<std::string>& path) {
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, "empty circuit path");
  const NodeDescriptor entry = dir_lookup(config_.directory, path.front());
  std::vector<NodeDescriptor> hops{entry};
  for (std::size_t i = 1; i < path.size(); ++i) hops.push_back(dir_lookup(config_.directory, path[i]));

  conn_ = connect_to(parse_endpoint(entry.address));
  conn_.set_receive_timeout(config_.timeout);
  conn_.send_frame(hello(config_.name));

  protocol::CircuitOptions options;
  options.target_hops = path.size();
  auto [state, action] = protocol::client_create(config_.params, circ_id, entry, rng_, options);
  state_ = std::move(state);
  send({action});

  bool corrupted = false;
  while (state_.phase == protocol::Phase::Creating || state_.phase == protocol::Phase::Extending) {
    protocol::Cell cell = next_cell();
    if (config_.corrupt_created && !corrupted && cell.command == onioncrypt::CellCommand::Created &&
        !cell.payload.empty()) {
      cell.payload.back() ^= 0x01;
      corrupted = true;
    }
    auto [next, actions] = protocol::client_handle_cell(state_, cell);
    state_ = std::move(next);
    send(actions);
    if (state_.phase == protocol::Phase::Extending && state_.all_confirmed()) {
      auto [extended, extend] = protocol::client_extend(state_, hops[state_.hops.size()], rng_);
      state_ = std::move(extended);
      send({extend});
    }
  }
  return state_;
}

Bytes StreamClient::round_trip(std::uint16_t stream_id, ByteView data) {
  send({protocol::client_send_data(state_, stream_id, data)});
  for (;;) {
    auto [next, actions] = protocol::client_handle_cell(state_, next_cell());
    state_ = std::move(next);
    for (const Action& action : actions) {
      if (const auto* local = std::get_if<protocol::DeliverLocal>(&action)) return local->data;
    }
    if (state_.phase == protocol::Phase::Failed) {
      throw Error(state_.failure.value_or(ErrorCode::CircuitDestroyed), "circuit failed");
    }
  }
}

void StreamClient::close() {
  conn_.shutdown();
  conn_.close();
}

}  // namespace onionkep::net
