#include "onionkep/protocol.hpp"

#include <algorithm>
#include <set>

#include "onionkep/keyfile.hpp"
#include "onionkep/onioncrypt.hpp"

namespace onionkep::protocol {

using nikep::Natural;
using onioncrypt::CellCommand;
using onioncrypt::RelayCommand;
using onioncrypt::RelayFrame;

namespace {

Cell destroy_cell(std::uint32_t circ_id) { return Cell{circ_id, CellCommand::Destroy, {}}; }

void require_params(const SystemParams& params, const net::NodeDescriptor& desc) {
  if (desc.params_digest != nikep::params_digest(params)) {
    throw Error(ErrorCode::ParamsMismatch, desc.name + " publishes a different parameter set");
  }
}

std::pair<CircuitState, Actions> fail_circuit(CircuitState state, ErrorCode reason,
                                              const std::string& detail) {
  state.phase = Phase::Failed;
  state.failure = reason;
  Actions actions;
  actions.emplace_back(SendCell{state.entry_link, destroy_cell(state.circ_id)});
  actions.emplace_back(TearDown{state.circ_id, reason, detail});
  return {std::move(state), std::move(actions)};
}

// Derives the pending hop's key from the answer and checks its digest.
std::pair<CircuitState, Actions> confirm_pending_hop(CircuitState state,
                                                     const onioncrypt::CreatedBody& body) {
  HopKeys& hop = state.hops.back();
  const Natural raw = nikep::strip(state.params, body.handshake, hop.ephemeral.priv.mask);
  const SessionKey key = nikep::reduce(state.params, raw);
  if (onioncrypt::key_digest(key) != body.digest) {
    return fail_circuit(std::move(state), ErrorCode::CircuitIntegrityFailure,
                        "key digest mismatch for hop " + hop.node_name);
  }
  hop.session = key;
  hop.confirmed = true;
  state.phase = state.hops.size() >= state.target_hops ? Phase::Ready : Phase::Extending;
  return {std::move(state), {}};
}

// Removes every layer the confirmed hops added and parses the frame.
RelayFrame open_backward(const CircuitState& state, const Cell& cell) {
  Bytes payload = cell.payload;
  for (const auto& hop : state.hops) {
    if (!hop.confirmed) break;
    payload = onioncrypt::onion_peel(payload, *hop.session, state.params);
  }
  return onioncrypt::decode_relay_frame(onioncrypt::unpack_payload(payload, state.params));
}

std::pair<CircuitState, Actions> handle_extended(const CircuitState& state, const Cell& cell) {
  try {
    const RelayFrame frame = open_backward(state, cell);
    if (frame.command != RelayCommand::Extended || frame.stream_id != 0) {
      return fail_circuit(state, ErrorCode::CircuitIntegrityFailure,
                          "expected EXTENDED on stream 0, got " +
                              std::string(onioncrypt::to_string(frame.command)));
    }
    return confirm_pending_hop(state, onioncrypt::decode_created(frame.data, state.params));
  } catch (const Error& e) {
    return fail_circuit(state, ErrorCode::CircuitIntegrityFailure, e.what());
  }
}

Actions tear_down_entry(const CircuitEntry& entry, ErrorCode reason, const std::string& detail,
                        bool notify_prev, bool notify_next) {
  Actions actions;
  if (notify_prev) actions.emplace_back(SendCell{entry.prev_link, destroy_cell(entry.circ_id)});
  if (notify_next && entry.next_link) {
    actions.emplace_back(SendCell{*entry.next_link, destroy_cell(*entry.next_circ_id)});
  }
  actions.emplace_back(TearDown{entry.circ_id, reason, detail});
  return actions;
}

std::pair<std::optional<CircuitEntry>, Actions> handle_terminal(const CircuitEntry& entry,
                                                                const Bytes& peeled,
                                                                const NodeState& node) {
  const SystemParams& params = node.params;
  const RelayFrame frame =
      onioncrypt::decode_relay_frame(onioncrypt::unpack_payload(peeled, params));
  switch (frame.command) {
    case RelayCommand::Extend: {
      const onioncrypt::ExtendBody body = onioncrypt::decode_extend(frame.data, params);
      const std::uint32_t onward = node.free_circ_id(body.node_name);
      CircuitEntry next = entry;
      next.next_link = body.node_name;
      next.next_circ_id = onward;
      next.extend_pending = true;
      Actions actions;
      actions.emplace_back(SendCell{
          body.node_name,
          Cell{onward, CellCommand::Create, onioncrypt::encode_create(body.create, params)}});
      return {std::move(next), std::move(actions)};
    }
    case RelayCommand::Data: {
      Actions actions;
      actions.emplace_back(DeliverLocal{entry.prev_link, entry.circ_id, frame.stream_id, frame.data});
      return {entry, std::move(actions)};
    }
    case RelayCommand::End:
    case RelayCommand::Connected:
      return {entry, {}};
    case RelayCommand::Extended:
      break;
  }
  throw Error(ErrorCode::MalformedPayload, "EXTENDED travelling forward");
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Creating: return "CREATING";
    case Phase::Extending: return "EXTENDING";
    case Phase::Ready: return "READY";
    case Phase::Failed: return "FAILED";
  }
  return "?";
}

bool CircuitState::all_confirmed() const {
  return std::all_of(hops.begin(), hops.end(), [](const HopKeys& h) { return h.confirmed; });
}

bool CircuitState::awaiting_response() const {
  return phase != Phase::Failed && !hops.empty() && !hops.back().confirmed;
}

std::vector<SessionKey> CircuitState::keys_exit_first() const {
  std::vector<SessionKey> keys;
  for (auto it = hops.rbegin(); it != hops.rend(); ++it) {
    if (it->confirmed) keys.push_back(*it->session);
  }
  return keys;
}

std::pair<CircuitState, Action> client_create(const SystemParams& params, std::uint32_t circ_id,
                                              const net::NodeDescriptor& entry,
                                              nikep::RandomSource& rng, CircuitOptions options) {
  require_params(params, entry);
  if (options.target_hops == 0) throw Error(ErrorCode::InvalidArgument, "circuit needs a hop");

  const nikep::KeyPair ephemeral = nikep::gen_keypair(params, rng, options.ephemeral_policy);
  const onioncrypt::CreateBody offer{nikep::mix(params, entry.pub, ephemeral.priv), ephemeral.pub};

  CircuitState state;
  state.circ_id = circ_id;
  state.entry_link = entry.name;
  state.params = params;
  state.hops.push_back(HopKeys{entry.name, ephemeral, std::nullopt, false});
  state.phase = Phase::Creating;
  state.target_hops = options.target_hops;

  Cell cell{circ_id, CellCommand::Create, onioncrypt::encode_create(offer, params)};
  return {std::move(state), SendCell{entry.name, std::move(cell)}};
}

std::pair<CircuitState, Actions> client_handle_created(const CircuitState& state, const Cell& cell) {
  if (cell.circ_id != state.circ_id || cell.command != CellCommand::Created ||
      state.phase != Phase::Creating || !state.awaiting_response()) {
    return {state, {}};
  }
  try {
    return confirm_pending_hop(state, onioncrypt::decode_created(cell.payload, state.params));
  } catch (const Error& e) {
    return fail_circuit(state, ErrorCode::CircuitIntegrityFailure, e.what());
  }
}

std::pair<CircuitState, Action> client_extend(const CircuitState& state,
                                              const net::NodeDescriptor& next,
                                              nikep::RandomSource& rng) {
  if (state.phase == Phase::Failed || state.hops.empty() || !state.all_confirmed()) {
    throw Error(ErrorCode::NotReady, "circuit has unconfirmed hops");
  }
  require_params(state.params, next);

  CircuitState out = state;
  const nikep::KeyPair ephemeral = nikep::gen_keypair(state.params, rng);
  const onioncrypt::ExtendBody body{
      next.name, {nikep::mix(state.params, next.pub, ephemeral.priv), ephemeral.pub}};
  const RelayFrame frame{RelayCommand::Extend, 0, onioncrypt::encode_extend(body, state.params)};

  // The newest confirmed hop's key is the innermost layer.
  const std::vector<SessionKey> keys = state.keys_exit_first();
  Bytes payload = onioncrypt::onion_wrap(onioncrypt::encode_relay_frame(frame), keys, state.params);

  out.hops.push_back(HopKeys{next.name, ephemeral, std::nullopt, false});
  out.phase = Phase::Extending;
  out.target_hops = std::max(out.target_hops, out.hops.size());

  Cell cell{state.circ_id, CellCommand::Relay, std::move(payload)};
  return {std::move(out), SendCell{state.entry_link, std::move(cell)}};
}

std::pair<CircuitState, Actions> client_handle_cell(const CircuitState& state, const Cell& cell) {
  if (cell.circ_id != state.circ_id || state.phase == Phase::Failed) return {state, {}};

  switch (cell.command) {
    case CellCommand::Created:
      return client_handle_created(state, cell);
    case CellCommand::Destroy: {
      return fail_circuit(state, ErrorCode::CircuitDestroyed, "relay destroyed the circuit");
    }
    case CellCommand::Relay:
      if (state.phase == Phase::Extending && state.awaiting_response()) {
        return handle_extended(state, cell);
      }
      if (state.phase == Phase::Ready) {
        try {
          const RelayFrame frame = open_backward(state, cell);
          if (frame.command != RelayCommand::Data) return {state, {}};
          Actions actions;
          actions.emplace_back(DeliverLocal{state.entry_link, state.circ_id, frame.stream_id, frame.data});
          return {state, std::move(actions)};
        } catch (const Error& e) {
          return fail_circuit(state, ErrorCode::MalformedPayload, e.what());
        }
      }
      return {state, {}};
    case CellCommand::Create:
      break;
  }
  return {state, {}};
}

Action client_send_data(const CircuitState& state, std::uint16_t stream_id, ByteView data) {
  if (state.phase != Phase::Ready) throw Error(ErrorCode::NotReady, "circuit is not ready");
  const RelayFrame frame{RelayCommand::Data, stream_id, Bytes(data.begin(), data.end())};
  const std::vector<SessionKey> keys = state.keys_exit_first();
  Bytes payload = onioncrypt::onion_wrap(onioncrypt::encode_relay_frame(frame), keys, state.params);
  return SendCell{state.entry_link, Cell{state.circ_id, CellCommand::Relay, std::move(payload)}};
}

Bytes client_handle_data(const CircuitState& state, const Cell& cell) {
  if (state.phase != Phase::Ready) throw Error(ErrorCode::NotReady, "circuit is not ready");
  const RelayFrame frame = open_backward(state, cell);
  if (frame.command != RelayCommand::Data) {
    throw Error(ErrorCode::MalformedPayload, "expected DATA frame");
  }
  return frame.data;
}

// ---------------------------------------------------------------------------

const CircuitEntry* NodeState::find_forward(const LinkId& link, std::uint32_t circ_id) const {
  auto it = circuits.find({link, circ_id});
  return it == circuits.end() ? nullptr : &it->second;
}

const CircuitEntry* NodeState::find_backward(const LinkId& link, std::uint32_t circ_id) const {
  for (const auto& [key, entry] : circuits) {
    if (entry.next_link == link && entry.next_circ_id == circ_id) return &entry;
  }
  return nullptr;
}

std::uint32_t NodeState::free_circ_id(const LinkId& link) const {
  constexpr std::uint32_t kUpperHalf = 0x80000000u;
  const std::uint32_t base = name > link ? kUpperHalf : 0;
  std::set<std::uint32_t> used;
  for (const auto& [key, entry] : circuits) {
    if (key.first == link) used.insert(key.second);
    if (entry.next_link == link) used.insert(*entry.next_circ_id);
  }
  std::uint32_t id = base + 1;
  while (used.contains(id)) ++id;
  return id;
}

NodeState make_node(std::string name, const SystemParams& params, const nikep::KeyPair& keys) {
  NodeState state;
  state.name = std::move(name);
  state.params = params;
  state.keys = keys;
  return state;
}

std::pair<std::optional<CircuitEntry>, Actions> node_handle_create(
    const SystemParams& params, const nikep::KeyPair& node_keys, const Cell& cell,
    const LinkId& prev_link) {
  try {
    const onioncrypt::CreateBody offer = onioncrypt::decode_create(cell.payload, params);
    const Natural raw = nikep::strip(params, offer.handshake, node_keys.priv.mask);
    const SessionKey session = nikep::reduce(params, raw);
    const onioncrypt::CreatedBody answer{nikep::mix(params, offer.constructor, node_keys.priv),
                                         onioncrypt::key_digest(session)};

    CircuitEntry entry;
    entry.circ_id = cell.circ_id;
    entry.prev_link = prev_link;
    entry.session = session;
    Actions actions;
    actions.emplace_back(SendCell{
        prev_link, Cell{cell.circ_id, CellCommand::Created, onioncrypt::encode_created(answer, params)}});
    return {std::move(entry), std::move(actions)};
  } catch (const Error& e) {
    Actions actions;
    actions.emplace_back(SendCell{prev_link, destroy_cell(cell.circ_id)});
    actions.emplace_back(TearDown{cell.circ_id, e.code(), e.what()});
    return {std::nullopt, std::move(actions)};
  }
}

std::pair<std::optional<CircuitEntry>, Actions> node_handle_relay(
    const NodeState& node, const CircuitEntry& entry, const Cell& cell, Direction direction) {
  const SystemParams& params = node.params;
  try {
    if (direction == Direction::Backward) {
      Bytes payload = onioncrypt::add_layer(cell.payload, entry.session, params);
      Actions actions;
      actions.emplace_back(
          SendCell{entry.prev_link, Cell{entry.circ_id, CellCommand::Relay, std::move(payload)}});
      return {entry, std::move(actions)};
    }

    Bytes peeled = onioncrypt::onion_peel(cell.payload, entry.session, params);
    if (entry.next_link) {
      Actions actions;
      actions.emplace_back(
          SendCell{*entry.next_link, Cell{*entry.next_circ_id, CellCommand::Relay, std::move(peeled)}});
      return {entry, std::move(actions)};
    }
    return handle_terminal(entry, peeled, node);
  } catch (const Error& e) {
    return {std::nullopt, tear_down_entry(entry, e.code(), e.what(), true, true)};
  }
}

std::pair<std::optional<CircuitEntry>, Actions> node_handle_created(
    const CircuitEntry& entry, const Cell& cell, const SystemParams& params) {
  if (!entry.extend_pending) {
    return {std::nullopt, tear_down_entry(entry, ErrorCode::UnknownCircuit,
                                          "CREATED without a pending extension", true, true)};
  }
  // The answer is passed through verbatim; only the client can check it.
  const RelayFrame frame{RelayCommand::Extended, 0, cell.payload};
  try {
    Bytes payload = onioncrypt::chunk_encrypt(onioncrypt::encode_relay_frame(frame), entry.session, params);
    CircuitEntry next = entry;
    next.extend_pending = false;
    Actions actions;
    actions.emplace_back(
        SendCell{entry.prev_link, Cell{entry.circ_id, CellCommand::Relay, std::move(payload)}});
    return {std::move(next), std::move(actions)};
  } catch (const Error& e) {
    return {std::nullopt, tear_down_entry(entry, e.code(), e.what(), true, true)};
  }
}

std::pair<NodeState, Actions> node_handle_cell(const NodeState& state, const LinkId& from,
                                               const Cell& cell) {
  NodeState out = state;
  const auto forward_key = std::make_pair(from, cell.circ_id);

  auto apply = [&](const std::pair<LinkId, std::uint32_t>& key,
                   std::pair<std::optional<CircuitEntry>, Actions> result) {
    if (result.first) {
      out.circuits[key] = std::move(*result.first);
    } else {
      out.circuits.erase(key);
    }
    return std::make_pair(std::move(out), std::move(result.second));
  };
  auto unknown = [&]() {
    Actions actions;
    actions.emplace_back(SendCell{from, destroy_cell(cell.circ_id)});
    actions.emplace_back(TearDown{cell.circ_id, ErrorCode::UnknownCircuit,
                                  "no circuit " + std::to_string(cell.circ_id) + " from " + from});
    return std::make_pair(std::move(out), std::move(actions));
  };

  const CircuitEntry* forward = state.find_forward(from, cell.circ_id);
  const CircuitEntry* backward = forward ? nullptr : state.find_backward(from, cell.circ_id);

  switch (cell.command) {
    case CellCommand::Create: {
      if (forward || backward) return {std::move(out), {}};
      return apply(forward_key, node_handle_create(state.params, state.keys, cell, from));
    }
    case CellCommand::Relay: {
      if (forward) {
        return apply(forward_key, node_handle_relay(state, *forward, cell, Direction::Forward));
      }
      if (backward) {
        return apply({backward->prev_link, backward->circ_id},
                     node_handle_relay(state, *backward, cell, Direction::Backward));
      }
      return unknown();
    }
    case CellCommand::Created: {
      if (!backward) return unknown();
      return apply({backward->prev_link, backward->circ_id},
                   node_handle_created(*backward, cell, state.params));
    }
    case CellCommand::Destroy: {
      if (forward) {
        Actions actions = tear_down_entry(*forward, ErrorCode::CircuitDestroyed,
                                          "destroyed by " + from, false, true);
        out.circuits.erase(forward_key);
        return {std::move(out), std::move(actions)};
      }
      if (backward) {
        Actions actions = tear_down_entry(*backward, ErrorCode::CircuitDestroyed,
                                          "destroyed by " + from, true, false);
        out.circuits.erase({backward->prev_link, backward->circ_id});
        return {std::move(out), std::move(actions)};
      }
      return {std::move(out), {}};
    }
  }
  return {std::move(out), {}};
}

Actions node_send_data(const NodeState& state, const LinkId& prev_link, std::uint32_t circ_id,
                       std::uint16_t stream_id, ByteView data) {
  const CircuitEntry* entry = state.find_forward(prev_link, circ_id);
  if (!entry) throw Error(ErrorCode::UnknownCircuit, "no circuit " + std::to_string(circ_id));
  if (entry->next_link) throw Error(ErrorCode::InvalidArgument, "circuit does not end here");
  const RelayFrame frame{RelayCommand::Data, stream_id, Bytes(data.begin(), data.end())};
  Bytes payload =
      onioncrypt::chunk_encrypt(onioncrypt::encode_relay_frame(frame), entry->session, state.params);
  Actions actions;
  actions.emplace_back(SendCell{prev_link, Cell{circ_id, CellCommand::Relay, std::move(payload)}});
  return actions;
}

std::pair<NodeState, Actions> node_handle_link_down(const NodeState& state, const LinkId& link) {
  NodeState out = state;
  Actions actions;
  for (auto it = out.circuits.begin(); it != out.circuits.end();) {
    const CircuitEntry& entry = it->second;
    const bool prev_lost = entry.prev_link == link;
    const bool next_lost = entry.next_link == link;
    if (!prev_lost && !next_lost) {
      ++it;
      continue;
    }
    Actions dropped = tear_down_entry(entry, ErrorCode::ConnectionLost, "link to " + link + " lost",
                                      !prev_lost, !next_lost);
    actions.insert(actions.end(), dropped.begin(), dropped.end());
    it = out.circuits.erase(it);
  }
  return {std::move(out), std::move(actions)};
}

}  // namespace onionkep::protocol
