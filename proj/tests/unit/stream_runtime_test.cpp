#include <gtest/gtest.h>

#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "onionkep/error.hpp"
#include "onionkep/runtime.hpp"
#include "onionkep/stream.hpp"
#include "onionkep/wire.hpp"
#include "oracles.hpp"

namespace onionkep {
namespace {

using net::Connection;
using net::Endpoint;
using net::Listener;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Endpoint, Parse) {
  const auto e = net::parse_endpoint("127.0.0.1:9050");
  EXPECT_EQ(e.host, "127.0.0.1");
  EXPECT_EQ(e.port, 9050);
  EXPECT_EQ(e.to_string(), "127.0.0.1:9050");
  for (const char* bad : {"nohost", "h:", ":1", "h:70000", "h:x1"}) {
    EXPECT_EQ(code_of([&] { net::parse_endpoint(bad); }), ErrorCode::InvalidArgument) << bad;
  }
}

TEST(Stream, LoopbackEchoOfOneCell) {
  Listener listener({"127.0.0.1", 0});
  std::thread server([&] {
    auto conn = listener.accept();
    while (auto frame = conn->recv_frame()) conn->send_frame(*frame);
  });
  Connection client = net::connect_to(listener.endpoint());
  const Bytes cell = onioncrypt::encode_cell({5, onioncrypt::CellCommand::Relay, Bytes(500, 0x5a)});
  client.send_frame(cell);
  EXPECT_EQ(client.recv_frame(), cell);
  client.close();
  server.join();
}

TEST(Stream, OversizedFrames) {
  Listener listener({"127.0.0.1", 0});
  std::thread server([&] {
    auto conn = listener.accept();
    conn->send_frame(Bytes(net::kMaxFrameBytes, 1));
    conn->recv_frame();
  });
  Connection client = net::connect_to(listener.endpoint());
  EXPECT_EQ(code_of([&] { client.send_frame(Bytes(net::kMaxFrameBytes + 1)); }),
            ErrorCode::FrameTooLarge);
  EXPECT_EQ(client.recv_frame()->size(), net::kMaxFrameBytes);
  client.close();
  server.join();
}

TEST(Stream, AnnouncedOversizeRejected) {
  Listener listener({"127.0.0.1", 0});
  std::thread peer([&] {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(listener.port());
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    const std::uint8_t header[] = {0x00, 0x01, 0x11, 0x71};  // 70001
    ASSERT_EQ(::send(fd, header, sizeof header, 0), 4);
    char sink;
    ::recv(fd, &sink, 1, 0);
    ::close(fd);
  });
  auto conn = listener.accept();
  EXPECT_EQ(code_of([&] { conn->recv_frame(); }), ErrorCode::FrameTooLarge);
  conn->close();
  peer.join();
}

TEST(Stream, InterleavedCircuitsKeepOrder) {
  Listener listener({"127.0.0.1", 0});
  std::vector<onioncrypt::Cell> received;
  std::thread server([&] {
    auto conn = listener.accept();
    while (auto frame = conn->recv_frame()) received.push_back(onioncrypt::decode_cell(*frame));
  });
  Connection client = net::connect_to(listener.endpoint());
  for (std::uint8_t i = 0; i < 100; ++i) {
    client.send_frame(onioncrypt::encode_cell({1u + i % 3, onioncrypt::CellCommand::Relay, {i}}));
  }
  client.close();
  server.join();
  ASSERT_EQ(received.size(), 100u);
  for (std::uint32_t circ = 1; circ <= 3; ++circ) {
    int last = -1;
    for (const auto& cell : received) {
      if (cell.circ_id != circ) continue;
      EXPECT_GT(cell.payload[0], last);
      last = cell.payload[0];
    }
  }
}

TEST(Stream, CleanCloseBetweenFrames) {
  Listener listener({"127.0.0.1", 0});
  std::thread server([&] {
    auto conn = listener.accept();
    conn->send_frame(Bytes{1, 2, 3});
  });
  Connection client = net::connect_to(listener.endpoint());
  EXPECT_EQ(client.recv_frame(), (Bytes{1, 2, 3}));
  server.join();
  EXPECT_EQ(client.recv_frame(), std::nullopt);
}

TEST(Stream, ReceiveTimeout) {
  Listener listener({"127.0.0.1", 0});
  std::thread server([&] {
    auto conn = listener.accept();
    conn->recv_frame();
  });
  Connection client = net::connect_to(listener.endpoint());
  client.set_receive_timeout(std::chrono::milliseconds(50));
  EXPECT_EQ(code_of([&] { client.recv_frame(); }), ErrorCode::ConnectionLost);
  client.close();
  server.join();
}

// Directory plus three relays on loopback.
class LiveNetwork : public ::testing::Test {
 protected:
  void SetUp() override {
    params_ = testing::seeded_params(64);
    directory_ = std::make_unique<net::Directory>(params_);
    dir_server_ = std::make_unique<net::DirectoryServer>(*directory_, Endpoint{"127.0.0.1", 0});
    dir_server_->start();
    modmath::SeededRandom rng(61);
    for (const char* name : {"B", "C", "D"}) {
      net::NodeServerConfig config;
      config.name = name;
      config.params = params_;
      config.keys = nikep::gen_keypair(params_, rng);
      config.directory = dir_server_->endpoint();
      nodes_.push_back(std::make_unique<net::NodeServer>(config));
      nodes_.back()->start();
    }
  }

  void TearDown() override {
    for (auto& node : nodes_) node->stop();
    dir_server_->stop();
  }

  net::StreamClientConfig client_config(bool corrupt = false) const {
    net::StreamClientConfig config;
    config.params = params_;
    config.directory = dir_server_->endpoint();
    config.corrupt_created = corrupt;
    return config;
  }

  nikep::SystemParams params_;
  std::unique_ptr<net::Directory> directory_;
  std::unique_ptr<net::DirectoryServer> dir_server_;
  std::vector<std::unique_ptr<net::NodeServer>> nodes_;
};

TEST_F(LiveNetwork, DirectoryClientCalls) {
  EXPECT_EQ(net::dir_list(dir_server_->endpoint()).size(), 3u);
  EXPECT_EQ(net::dir_lookup(dir_server_->endpoint(), "C").name, "C");
  EXPECT_EQ(code_of([&] { net::dir_lookup(dir_server_->endpoint(), "Q"); }), ErrorCode::NotFound);
}

TEST_F(LiveNetwork, BuildAndRoundTrip) {
  modmath::SeededRandom rng(62);
  net::StreamClient client(client_config(), rng);
  const auto& circuit = client.build(1, {"B", "C", "D"});
  ASSERT_EQ(circuit.phase, protocol::Phase::Ready);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto state = nodes_[i]->state();
    ASSERT_EQ(state.circuits.size(), 1u);
    EXPECT_EQ(state.circuits.begin()->second.session.raw, circuit.hops[i].session->raw);
  }
  for (std::size_t len : {0, 1, 100, 4096}) {
    const Bytes data = testing::random_bytes(rng, len);
    EXPECT_EQ(client.round_trip(1, data), data);
  }
  const auto delivered = nodes_[2]->deliveries();
  ASSERT_EQ(delivered.size(), 4u);
  EXPECT_EQ(delivered[3].data.size(), 4096u);
  client.close();
}

TEST_F(LiveNetwork, CorruptedCreatedFails) {
  modmath::SeededRandom rng(63);
  net::StreamClient client(client_config(true), rng);
  const auto& circuit = client.build(1, {"B", "C", "D"});
  EXPECT_EQ(circuit.phase, protocol::Phase::Failed);
  EXPECT_EQ(circuit.failure, ErrorCode::CircuitIntegrityFailure);
  client.close();
}

TEST_F(LiveNetwork, UnknownHop) {
  modmath::SeededRandom rng(64);
  net::StreamClient client(client_config(), rng);
  EXPECT_EQ(code_of([&] { client.build(1, {"B", "Nope"}); }), ErrorCode::NotFound);
}

TEST_F(LiveNetwork, ClientDisconnectTearsDownRelays) {
  modmath::SeededRandom rng(65);
  {
    net::StreamClient client(client_config(), rng);
    ASSERT_EQ(client.build(1, {"B", "C", "D"}).phase, protocol::Phase::Ready);
    client.close();
  }
  for (int i = 0; i < 200 && !nodes_[2]->state().circuits.empty(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  for (auto& node : nodes_) EXPECT_TRUE(node->state().circuits.empty());
}

}  // namespace
}  // namespace onionkep
