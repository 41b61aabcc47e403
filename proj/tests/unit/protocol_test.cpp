#include <gtest/gtest.h>

#include "onionkep/error.hpp"
#include "onionkep/protocol.hpp"
#include "onionkep/simnet.hpp"
#include "onionkep/wire.hpp"
#include "oracles.hpp"

namespace onionkep {
namespace {

using namespace protocol;
using onioncrypt::CellCommand;
using onioncrypt::RelayCommand;

const nikep::SystemParams& toy() {
  static const auto params = testing::toy_params();
  return params;
}

net::NodeDescriptor toy_descriptor(const std::string& name, const nikep::KeyPair& keys) {
  return net::make_descriptor(name, "sim://" + name, toy(), keys.pub);
}

// Makes the next toy gen_keypair draw exponent x and mask k (k in (11, 44)).
void script_toy_keypair(testing::QueueRandom& rng, unsigned x, unsigned k) {
  rng.push_bits(x - 2, 5);   // exponent range [2, 18] has 17 values
  rng.push_bits(k - 12, 6);  // prefix-safe mask range [12, 43] has 32 values
}

std::vector<SendCell> sends(const Actions& actions) {
  std::vector<SendCell> out;
  for (const auto& a : actions) {
    if (const auto* s = std::get_if<SendCell>(&a)) out.push_back(*s);
  }
  return out;
}

bool has_teardown(const Actions& actions, ErrorCode reason) {
  for (const auto& a : actions) {
    if (const auto* t = std::get_if<TearDown>(&a); t && t->reason == reason) return true;
  }
  return false;
}

struct ToyCreate {
  CircuitState state;
  Cell create;
};

ToyCreate toy_create(std::size_t target_hops) {
  testing::QueueRandom rng;
  script_toy_keypair(rng, 3, 13);
  auto [state, action] = client_create(toy(), 7, toy_descriptor("B", testing::toy_bob()), rng,
                                       {.target_hops = target_hops});
  EXPECT_TRUE(rng.empty());
  return {state, std::get<SendCell>(action).cell};
}

TEST(ClientCreate, ToyPayload) {
  const auto [state, cell] = toy_create(3);
  EXPECT_EQ(cell.circ_id, 7u);
  EXPECT_EQ(cell.command, CellCommand::Create);
  EXPECT_EQ(cell.payload, (Bytes{12, 40, 28}));
  EXPECT_EQ(state.phase, Phase::Creating);
  EXPECT_EQ(state.entry_link, "B");
  ASSERT_EQ(state.hops.size(), 1u);
  EXPECT_EQ(state.hops[0].ephemeral, testing::toy_alice());
  EXPECT_FALSE(state.hops[0].session.has_value());
}

TEST(ClientCreate, IndependentDrawsGiveDistinctEphemerals) {
  const auto& params = testing::seeded_params(64);
  modmath::SeededRandom rng(51);
  const auto desc = net::make_descriptor("B", "x", params, nikep::gen_keypair(params, rng).pub);
  const auto a = client_create(params, 1, desc, rng).first;
  const auto b = client_create(params, 1, desc, rng).first;
  EXPECT_NE(a.hops[0].ephemeral, b.hops[0].ephemeral);
}

TEST(ClientCreate, ForeignParametersRejected) {
  modmath::SeededRandom rng(52);
  const auto desc = net::make_descriptor("B", "x", testing::seeded_params(16),
                                         nikep::gen_keypair(testing::seeded_params(16), rng).pub);
  try {
    client_create(toy(), 1, desc, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParamsMismatch);
  }
}

TEST(NodeCreate, ToyAnswer) {
  const auto [state, cell] = toy_create(3);
  const auto [entry, actions] = node_handle_create(toy(), testing::toy_bob(), cell, "A");
  ASSERT_TRUE(entry.has_value());
  EXPECT_EQ(entry->session.raw, 36);
  EXPECT_EQ(entry->prev_link, "A");
  EXPECT_FALSE(entry->next_link.has_value());

  const auto out = sends(actions);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].link, "A");
  EXPECT_EQ(out[0].cell.command, CellCommand::Created);
  const auto body = onioncrypt::decode_created(out[0].cell.payload, toy());
  EXPECT_EQ(body.handshake.value, 28);
  EXPECT_EQ(body.digest, onioncrypt::key_digest(nikep::reduce(toy(), 36)));
}

TEST(NodeCreate, NonDivisibleSecretDestroys) {
  const Cell cell{7, CellCommand::Create, {35, 40, 28}};
  const auto [entry, actions] = node_handle_create(toy(), testing::toy_bob(), cell, "A");
  EXPECT_FALSE(entry.has_value());
  const auto out = sends(actions);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].cell.command, CellCommand::Destroy);
  EXPECT_TRUE(has_teardown(actions, ErrorCode::MalformedSessionKey));
}

Cell created_cell(std::uint8_t value, std::uint32_t circ_id = 7) {
  Bytes payload{value};
  const auto digest = onioncrypt::key_digest(nikep::reduce(toy(), 36));
  payload.insert(payload.end(), digest.begin(), digest.end());
  return {circ_id, CellCommand::Created, payload};
}

TEST(ClientCreated, ConfirmsToyKey) {
  const auto [state, cell] = toy_create(3);
  const auto [next, actions] = client_handle_cell(state, created_cell(28));
  EXPECT_TRUE(actions.empty());
  ASSERT_TRUE(next.hops[0].confirmed);
  EXPECT_EQ(next.hops[0].session->raw, 36);
  EXPECT_EQ(next.phase, Phase::Extending);
  EXPECT_TRUE(next.all_confirmed());
}

TEST(ClientCreated, SingleHopBecomesReady) {
  const auto [state, cell] = toy_create(1);
  EXPECT_EQ(client_handle_cell(state, created_cell(28)).first.phase, Phase::Ready);
}

TEST(ClientCreated, TamperedValueFails) {
  const auto [state, cell] = toy_create(3);
  const auto [next, actions] = client_handle_cell(state, created_cell(29));
  EXPECT_EQ(next.phase, Phase::Failed);
  EXPECT_EQ(next.failure, ErrorCode::CircuitIntegrityFailure);
  EXPECT_TRUE(has_teardown(actions, ErrorCode::CircuitIntegrityFailure));
  const auto out = sends(actions);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].cell.command, CellCommand::Destroy);
}

TEST(ClientCreated, OtherCircuitIgnored) {
  const auto [state, cell] = toy_create(3);
  const auto [next, actions] = client_handle_cell(state, created_cell(28, 8));
  EXPECT_EQ(next, state);
  EXPECT_TRUE(actions.empty());
}

TEST(ClientCreated, DestroyFailsCircuit) {
  const auto [state, cell] = toy_create(3);
  const auto next = client_handle_cell(state, {7, CellCommand::Destroy, {}}).first;
  EXPECT_EQ(next.phase, Phase::Failed);
  EXPECT_EQ(next.failure, ErrorCode::CircuitDestroyed);
}

TEST(ClientExtend, FirstExtensionHasOneLayer) {
  const auto [state, cell] = toy_create(3);
  const auto confirmed = client_handle_cell(state, created_cell(28)).first;
  const auto carol = nikep::keypair_from(toy(), 7, 17);
  testing::QueueRandom rng;
  script_toy_keypair(rng, 4, 19);
  const auto [next, action] = client_extend(confirmed, toy_descriptor("C", carol), rng);
  const Cell relay = std::get<SendCell>(action).cell;
  EXPECT_EQ(relay.command, CellCommand::Relay);
  EXPECT_EQ(next.hops.size(), 2u);

  const Bytes peeled = onioncrypt::onion_peel(relay.payload, *confirmed.hops[0].session, toy());
  const auto frame = onioncrypt::decode_relay_frame(onioncrypt::unpack_payload(peeled, toy()));
  EXPECT_EQ(frame.command, RelayCommand::Extend);
  const auto body = onioncrypt::decode_extend(frame.data, toy());
  EXPECT_EQ(body.node_name, "C");
  EXPECT_EQ(body.create.constructor, nikep::keypair_from(toy(), 4, 19).pub);
  EXPECT_EQ(body.create.handshake,
            nikep::mix(toy(), carol.pub, nikep::keypair_from(toy(), 4, 19).priv));
}

TEST(ClientExtend, RequiresConfirmedHops) {
  const auto [state, cell] = toy_create(3);
  testing::QueueRandom rng;
  try {
    client_extend(state, toy_descriptor("C", testing::toy_alice()), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotReady);
  }
}

TEST(ClientData, RequiresReady) {
  const auto [state, cell] = toy_create(3);
  EXPECT_THROW(client_send_data(state, 1, to_bytes("x")), Error);
}

TEST(NodeRelay, ToyExtendBecomesCreate) {
  const auto [state, create] = toy_create(3);
  auto node = make_node("B", toy(), testing::toy_bob());
  auto [node2, created] = node_handle_cell(node, "A", create);
  const auto confirmed = client_handle_cell(state, sends(created)[0].cell).first;

  const auto carol = nikep::keypair_from(toy(), 7, 17);
  testing::QueueRandom rng;
  script_toy_keypair(rng, 4, 19);
  const auto relay = std::get<SendCell>(client_extend(confirmed, toy_descriptor("C", carol), rng).second);
  const auto [node3, actions] = node_handle_cell(node2, "A", relay.cell);
  const auto out = sends(actions);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].link, "C");
  EXPECT_EQ(out[0].cell.command, CellCommand::Create);
  const auto entry = node3.find_forward("A", 7);
  ASSERT_NE(entry, nullptr);
  EXPECT_EQ(entry->next_link, std::optional<LinkId>("C"));
  EXPECT_TRUE(entry->extend_pending);
  EXPECT_EQ(out[0].cell.circ_id, 1u);
  EXPECT_EQ(entry->next_circ_id, std::optional<std::uint32_t>(1));
}

TEST(NodeState, FreeCircIdSplitsLinkAndSkipsUsed) {
  auto node = make_node("C", toy(), testing::toy_bob());
  EXPECT_EQ(node.free_circ_id("D"), 1u);
  EXPECT_EQ(node.free_circ_id("B"), 0x80000001u);
  CircuitEntry entry;
  entry.circ_id = 1;
  entry.prev_link = "D";
  entry.next_link = "E";
  entry.next_circ_id = 1;
  node.circuits[{"D", 1}] = entry;
  EXPECT_EQ(node.free_circ_id("D"), 2u);
  EXPECT_EQ(node.free_circ_id("E"), 2u);
  EXPECT_EQ(node.free_circ_id("F"), 1u);
}

TEST(NodeRelay, UnknownCircuitIsDropped) {
  auto node = make_node("B", toy(), testing::toy_bob());
  const auto [next, actions] = node_handle_cell(node, "A", {99, CellCommand::Relay, {}});
  EXPECT_EQ(next.circuits.size(), 0u);
  for (const auto& s : sends(actions)) EXPECT_EQ(s.cell.command, CellCommand::Destroy);
}

TEST(NodeLinkDown, TearsDownAffectedCircuits) {
  const auto [state, create] = toy_create(3);
  auto node = make_node("B", toy(), testing::toy_bob());
  node = node_handle_cell(node, "A", create).first;
  ASSERT_EQ(node.circuits.size(), 1u);
  const auto [next, actions] = node_handle_link_down(node, "A");
  EXPECT_TRUE(next.circuits.empty());
  EXPECT_TRUE(has_teardown(actions, ErrorCode::ConnectionLost));
  EXPECT_EQ(node_handle_link_down(node, "Z").first, node);
}

net::SimResult toy_circuit(std::uint64_t seed, std::vector<net::ScriptEvent> extra = {}) {
  net::SimConfig config;
  config.params = toy();
  config.seed = seed;
  config.relays = {{"B", testing::toy_bob()},
                   {"C", nikep::keypair_from(toy(), 7, 17)},
                   {"D", nikep::keypair_from(toy(), 9, 23)}};
  std::vector<net::ScriptEvent> script{net::BuildCircuit{1, {"B", "C", "D"}}};
  script.insert(script.end(), extra.begin(), extra.end());
  return net::simnet_run(config, script);
}

TEST(Circuit, ToyThreeHopDeliversHi) {
  const auto result = toy_circuit(1, {net::SendData{1, 1, to_bytes("hi")}});
  EXPECT_EQ(result.circuits.at(1).phase, Phase::Ready);
  ASSERT_EQ(result.exit_deliveries.size(), 1u);
  EXPECT_EQ(result.exit_deliveries[0].node, "D");
  EXPECT_EQ(result.exit_deliveries[0].data, to_bytes("hi"));
  ASSERT_EQ(result.client_deliveries.size(), 1u);
  EXPECT_EQ(result.client_deliveries[0].data, to_bytes("hi"));
}

TEST(Circuit, EmptyPayloadRoundTrips) {
  const auto result = toy_circuit(2, {net::SendData{1, 1, {}}});
  ASSERT_EQ(result.exit_deliveries.size(), 1u);
  EXPECT_TRUE(result.exit_deliveries[0].data.empty());
}

TEST(Circuit, SessionKeysAgreeAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto result = toy_circuit(seed);
    const auto& circuit = result.circuits.at(1);
    ASSERT_EQ(circuit.phase, Phase::Ready);
    const char* names[] = {"B", "C", "D"};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& node = result.nodes.at(names[i]);
      ASSERT_EQ(node.circuits.size(), 1u);
      EXPECT_EQ(node.circuits.begin()->second.session.raw, circuit.hops[i].session->raw);
    }
  }
}

TEST(Circuit, SingleHopUsesOneLayer) {
  net::SimConfig config;
  config.params = testing::seeded_params(16);
  config.seed = 3;
  config.relays = {{"B", std::nullopt}};
  const auto result = net::simnet_run(
      config, {net::BuildCircuit{1, {"B"}}, net::SendData{1, 1, to_bytes("solo")}});
  const auto& circuit = result.circuits.at(1);
  ASSERT_EQ(circuit.phase, Phase::Ready);
  const auto data = std::get<SendCell>(client_send_data(circuit, 1, to_bytes("solo")));
  const Bytes once = onioncrypt::onion_peel(data.cell.payload, *circuit.hops[0].session,
                                            config.params);
  EXPECT_EQ(onioncrypt::decode_relay_frame(onioncrypt::unpack_payload(once, config.params)).data,
            to_bytes("solo"));
}

TEST(Purity, TransitionsAreReplayable) {
  const auto [state, cell] = toy_create(3);
  EXPECT_EQ(client_handle_cell(state, created_cell(28)), client_handle_cell(state, created_cell(28)));
  const auto node = make_node("B", toy(), testing::toy_bob());
  EXPECT_EQ(node_handle_cell(node, "A", cell), node_handle_cell(node, "A", cell));
}

}  // namespace
}  // namespace onionkep
