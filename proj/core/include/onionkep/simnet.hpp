#pragma once

// Single-threaded, deterministic network of relays and one client.
//
// Cells travel over named links through one global FIFO queue, so per-link
// ordering is preserved and the interleaving depends only on the script and
// the seed. Every delivered cell is appended to the transcript exactly as it
// crossed the wire.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "onionkep/bytes.hpp"
#include "onionkep/descriptor.hpp"
#include "onionkep/protocol.hpp"

namespace onionkep::net {

struct TranscriptEntry {
  std::uint64_t step = 0;
  std::string from;
  std::string to;
  Bytes bytes;

  bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  // step(8) ‖ len(1) ‖ from ‖ len(1) ‖ to ‖ len(4) ‖ bytes, per entry.
  Bytes serialize() const;
  // Entries on the link between a and b, either direction.
  std::vector<TranscriptEntry> on_link(const std::string& a, const std::string& b) const;
  std::vector<onioncrypt::CellCommand> commands() const;

  bool operator==(const Transcript&) const = default;
};

// Builds a circuit along `path` (entry first), extending hop by hop.
struct BuildCircuit {
  std::uint32_t circ_id = 0;
  std::vector<std::string> path;
};

struct SendData {
  std::uint32_t circ_id = 0;
  std::uint16_t stream_id = 1;
  Bytes data;
};

// XORs one payload byte of the n-th cell with `command` sent from → to.
struct TamperCell {
  std::string from;
  std::string to;
  onioncrypt::CellCommand command = onioncrypt::CellCommand::Created;
  std::size_t occurrence = 0;
  std::size_t payload_offset = 0;
  std::uint8_t xor_mask = 0x01;
};

// Silently discards the n-th cell sent from → to.
struct DropCell {
  std::string from;
  std::string to;
  std::size_t occurrence = 0;
};

// Events run in order; each one is followed by running the network until it
// is quiet. Tamper and drop rules apply to traffic after they are scripted.
using ScriptEvent = std::variant<BuildCircuit, SendData, TamperCell, DropCell>;

struct RelaySpec {
  std::string name;
  std::optional<nikep::KeyPair> keys;  // generated from the seed when absent
};

struct SimConfig {
  nikep::SystemParams params;
  std::vector<RelaySpec> relays;
  std::string client_name = "A";
  std::uint64_t seed = 0;
  std::size_t step_budget = 100'000;
  // Exit relays answer every DATA frame with the same bytes.
  bool exit_echo = true;
  nikep::KeyPolicy ephemeral_policy{};
};

struct Delivery {
  std::string node;
  std::uint32_t circ_id = 0;
  std::uint16_t stream_id = 0;
  Bytes data;

  bool operator==(const Delivery&) const = default;
};

struct NamedTearDown {
  std::string node;
  protocol::TearDown teardown;

  bool operator==(const NamedTearDown&) const = default;
};

struct SimResult {
  std::map<std::string, protocol::NodeState> nodes;
  std::map<std::uint32_t, protocol::CircuitState> circuits;
  std::vector<NodeDescriptor> directory;
  std::vector<Delivery> exit_deliveries;
  std::vector<Delivery> client_deliveries;
  std::vector<NamedTearDown> teardowns;
  Transcript transcript;
  std::uint64_t steps = 0;

  bool operator==(const SimResult&) const = default;
};

// Throws StepBudgetExceeded, NotFound for unknown path names, and
// DuplicateName for repeated relay names.
SimResult simnet_run(const SimConfig& config, const std::vector<ScriptEvent>& script);

}  // namespace onionkep::net
