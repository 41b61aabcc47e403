#pragma once

// Circuit construction and relaying as pure transition functions.
//
// A client telescopes a circuit one hop at a time. Each hop gets its own
// ephemeral constructor; the hop answers with its half of the exchange and
// the digest of the derived key, which the client checks before trusting the
// hop. Extensions travel inside RELAY cells wrapped with the keys of every
// confirmed hop, so a relay only ever learns the key it shares with the
// client and the names of its two neighbours.
//
// Every function takes state by const reference and returns the successor
// state plus the actions to perform, so replaying the same inputs always
// produces the same outputs.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "onionkep/descriptor.hpp"
#include "onionkep/error.hpp"
#include "onionkep/nikep.hpp"
#include "onionkep/wire.hpp"

namespace onionkep::protocol {

using nikep::SessionKey;
using nikep::SystemParams;
using onioncrypt::Cell;

// Name of the peer at the other end of a link.
using LinkId = std::string;

struct SendCell {
  LinkId link;
  Cell cell;

  bool operator==(const SendCell&) const = default;
};

struct DeliverLocal {
  LinkId link;  // link the circuit arrived on
  std::uint32_t circ_id = 0;
  std::uint16_t stream_id = 0;
  Bytes data;

  bool operator==(const DeliverLocal&) const = default;
};

struct TearDown {
  std::uint32_t circ_id = 0;
  ErrorCode reason = ErrorCode::CircuitIntegrityFailure;
  std::string detail;

  bool operator==(const TearDown&) const = default;
};

using Action = std::variant<SendCell, DeliverLocal, TearDown>;
using Actions = std::vector<Action>;

// ---------------------------------------------------------------------------
// Client side

struct HopKeys {
  std::string node_name;
  nikep::KeyPair ephemeral;
  std::optional<SessionKey> session;
  bool confirmed = false;

  bool operator==(const HopKeys&) const = default;
};

enum class Phase { Creating, Extending, Ready, Failed };

std::string_view to_string(Phase phase) noexcept;

struct CircuitOptions {
  std::size_t target_hops = 3;
  nikep::KeyPolicy ephemeral_policy{};
};

struct CircuitState {
  std::uint32_t circ_id = 0;
  LinkId entry_link;
  SystemParams params;
  std::vector<HopKeys> hops;
  Phase phase = Phase::Creating;
  std::size_t target_hops = 3;
  std::optional<ErrorCode> failure;

  bool all_confirmed() const;
  // Index of the hop being added while the phase is Creating or Extending.
  std::size_t extending_index() const { return hops.size() - (all_confirmed() ? 0 : 1); }
  bool awaiting_response() const;
  // Confirmed session keys, exit hop first: the order onion_wrap expects.
  std::vector<SessionKey> keys_exit_first() const;

  bool operator==(const CircuitState&) const = default;
};

std::pair<CircuitState, Action> client_create(const SystemParams& params, std::uint32_t circ_id,
                                              const net::NodeDescriptor& entry,
                                              nikep::RandomSource& rng,
                                              CircuitOptions options = {});

// Confirms the first hop. A digest mismatch or malformed answer fails the
// circuit with CircuitIntegrityFailure. Cells for other circuits are ignored.
std::pair<CircuitState, Actions> client_handle_created(const CircuitState& state, const Cell& cell);

// Throws NotReady unless every existing hop is confirmed.
std::pair<CircuitState, Action> client_extend(const CircuitState& state,
                                              const net::NodeDescriptor& next,
                                              nikep::RandomSource& rng);

// Dispatches any cell arriving on the entry link: CREATED, RELAY carrying
// EXTENDED or DATA, and DESTROY. DATA surfaces as a DeliverLocal action.
std::pair<CircuitState, Actions> client_handle_cell(const CircuitState& state, const Cell& cell);

// Throws NotReady unless the circuit is Ready.
Action client_send_data(const CircuitState& state, std::uint16_t stream_id, ByteView data);
// Peels every layer of a RELAY cell and returns the DATA bytes.
// Throws NotReady or MalformedPayload.
Bytes client_handle_data(const CircuitState& state, const Cell& cell);

// ---------------------------------------------------------------------------
// Relay side

struct CircuitEntry {
  std::uint32_t circ_id = 0;
  LinkId prev_link;
  SessionKey session;
  std::optional<LinkId> next_link;
  std::optional<std::uint32_t> next_circ_id;
  bool extend_pending = false;

  bool operator==(const CircuitEntry&) const = default;
};

enum class Direction { Forward, Backward };

struct NodeState {
  std::string name;
  SystemParams params;
  nikep::KeyPair keys;
  // Keyed by (prev_link, circ_id).
  std::map<std::pair<LinkId, std::uint32_t>, CircuitEntry> circuits;

  const CircuitEntry* find_forward(const LinkId& link, std::uint32_t circ_id) const;
  const CircuitEntry* find_backward(const LinkId& link, std::uint32_t circ_id) const;
  // Smallest id unused on `link` in either direction, taken from this node's
  // half of the id space: the top bit is set iff name sorts after the peer.
  // Both ends of a node-to-node link therefore never pick the same id.
  std::uint32_t free_circ_id(const LinkId& link) const;

  bool operator==(const NodeState&) const = default;
};

NodeState make_node(std::string name, const SystemParams& params, const nikep::KeyPair& keys);

// Answers a CREATE. On a malformed offer no entry is produced and the
// actions are a DESTROY back to prev_link plus a TearDown.
std::pair<std::optional<CircuitEntry>, Actions> node_handle_create(
    const SystemParams& params, const nikep::KeyPair& node_keys, const Cell& cell,
    const LinkId& prev_link);

// Handles a RELAY cell on an existing entry. Forward cells lose one layer and
// are either passed on (when the entry has a next hop) or parsed here;
// backward cells gain one layer and head to prev_link. An EXTEND takes its
// onward id from node.free_circ_id. A nullopt entry means the circuit was
// torn down.
std::pair<std::optional<CircuitEntry>, Actions> node_handle_relay(
    const NodeState& node, const CircuitEntry& entry, const Cell& cell, Direction direction);

// Turns the next hop's CREATED into an EXTENDED for the client.
std::pair<std::optional<CircuitEntry>, Actions> node_handle_created(
    const CircuitEntry& entry, const Cell& cell, const SystemParams& params);

// Routes a cell received from `from` to the matching circuit entry.
std::pair<NodeState, Actions> node_handle_cell(const NodeState& state, const LinkId& from,
                                               const Cell& cell);

// Sends DATA back toward the client on a circuit that terminates here.
Actions node_send_data(const NodeState& state, const LinkId& prev_link, std::uint32_t circ_id,
                       std::uint16_t stream_id, ByteView data);

// Drops every circuit that used `link` and notifies the surviving neighbour.
std::pair<NodeState, Actions> node_handle_link_down(const NodeState& state, const LinkId& link);

}  // namespace onionkep::protocol
