#pragma once

// Cell and relay-frame layouts.
//
//   cell         circ_id(4) ‖ command(1) ‖ payload_len(2) ‖ payload
//   relay frame  subcommand(1) ‖ stream_id(2) ‖ data_len(2) ‖ data
//   CREATE       V(W) ‖ P(W) ‖ Q(W)
//   CREATED      V'(W) ‖ digest(32)
//   EXTEND       name_len(1) ‖ name ‖ V(W) ‖ P(W) ‖ Q(W)
//   EXTENDED     V'(W) ‖ digest(32)
//
// W = ceil(bitlen(n) / 8). Integers are big-endian.

#include <cstdint>
#include <string>

#include "onionkep/bytes.hpp"
#include "onionkep/nikep.hpp"
#include "onionkep/onioncrypt.hpp"

namespace onionkep::onioncrypt {

inline constexpr std::size_t kMaxPayload = 0xffff;

enum class CellCommand : std::uint8_t {
  Create = 0x01,
  Created = 0x02,
  Relay = 0x03,
  Destroy = 0x04,
};

enum class RelayCommand : std::uint8_t {
  Extend = 0x01,
  Extended = 0x02,
  Data = 0x03,
  Connected = 0x04,
  End = 0x05,
};

std::string_view to_string(CellCommand command) noexcept;
std::string_view to_string(RelayCommand command) noexcept;

struct Cell {
  std::uint32_t circ_id = 0;
  CellCommand command = CellCommand::Create;
  Bytes payload;

  bool operator==(const Cell&) const = default;
};

// Throws EncodingOverflow for payloads over 65535 bytes.
Bytes encode_cell(const Cell& cell);
// Throws UnknownCommand or TruncatedCell (short input or trailing bytes).
Cell decode_cell(ByteView bytes);

struct RelayFrame {
  RelayCommand command = RelayCommand::Data;
  std::uint16_t stream_id = 0;
  Bytes data;

  bool operator==(const RelayFrame&) const = default;
};

Bytes encode_relay_frame(const RelayFrame& frame);
// Throws UnknownSubcommand or TruncatedFrame.
RelayFrame decode_relay_frame(ByteView bytes);

// Handshake offer: masked secret plus the sender's ephemeral constructor.
struct CreateBody {
  nikep::HandshakeValue handshake;
  nikep::PublicConstructor constructor;

  bool operator==(const CreateBody&) const = default;
};

// Handshake answer: masked secret plus the digest of the derived key.
struct CreatedBody {
  nikep::HandshakeValue handshake;
  KeyDigest digest{};

  bool operator==(const CreatedBody&) const = default;
};

struct ExtendBody {
  std::string node_name;
  CreateBody create;

  bool operator==(const ExtendBody&) const = default;
};

// Decoders throw TruncatedFrame on length mismatches and MalformedPayload on
// residues that are not below n.
Bytes encode_create(const CreateBody& body, const nikep::SystemParams& params);
CreateBody decode_create(ByteView bytes, const nikep::SystemParams& params);

Bytes encode_created(const CreatedBody& body, const nikep::SystemParams& params);
CreatedBody decode_created(ByteView bytes, const nikep::SystemParams& params);

Bytes encode_extend(const ExtendBody& body, const nikep::SystemParams& params);
ExtendBody decode_extend(ByteView bytes, const nikep::SystemParams& params);

}  // namespace onionkep::onioncrypt
