#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "onionkep/bytes.hpp"
#include "onionkep/nikep.hpp"

namespace onionkep::net {

// What the directory publishes about a relay. Clients take long-term
// constructors only from here, never from another relay.
struct NodeDescriptor {
  std::string name;     // unique, at most 255 bytes
  std::string address;  // "host:port" for the stream transport; free-form in the simulator
  nikep::PublicConstructor pub;
  std::array<std::uint8_t, 32> params_digest{};

  bool operator==(const NodeDescriptor&) const = default;
};

NodeDescriptor make_descriptor(std::string name, std::string address,
                               const nikep::SystemParams& params,
                               const nikep::PublicConstructor& pub);

// Field TLVs: 0x20 name, 0x21 address, 0x07 P, 0x08 Q, 0x22 params digest.
Bytes encode_descriptor(const NodeDescriptor& desc);
// Throws MalformedPayload.
NodeDescriptor decode_descriptor(ByteView fields);

}  // namespace onionkep::net
