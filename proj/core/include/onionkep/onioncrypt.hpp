#pragma once

// Byte-level use of the multiplicative block cipher.
//
// A layered payload is an 8-byte big-endian bit count followed by fixed-size
// blocks. The plaintext bitstream is cut into (bitlen(r) - 1)-bit pieces, so
// every piece is already below r, and each block is stored in
// ceil(bitlen(r) / 8) bytes. Adding an onion layer multiplies every block by
// a reduced session key mod r; peeling multiplies by its inverse. The header
// is shared by all layers and is only consumed when the payload is unpacked.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "onionkep/bytes.hpp"
#include "onionkep/nikep.hpp"

namespace onionkep::onioncrypt {

using nikep::SessionKey;
using nikep::SystemParams;

using KeyDigest = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kPayloadHeaderBytes = 8;

struct BlockLayout {
  std::size_t plain_bits;   // bits of plaintext per block
  std::size_t block_bytes;  // encoded width of one block
};

BlockLayout block_layout(const SystemParams& params);

// Length in bytes of a packed payload carrying `bit_length` plaintext bits.
std::size_t payload_size(std::uint64_t bit_length, const SystemParams& params);

// Layer-free payload of the first `bit_length` bits of `data`.
Bytes pack_payload(ByteView data, std::uint64_t bit_length, const SystemParams& params);
// Reads a fully peeled payload back into bytes (ceil(bits/8) of them). Bits
// past the declared length must be zero. Throws MalformedPayload.
Bytes unpack_payload(ByteView payload, const SystemParams& params);

Bytes add_layer(ByteView payload, const SessionKey& key, const SystemParams& params);
// Removes one layer; the result is still a payload. Throws MalformedPayload on
// a bad header, misaligned length or a block >= r.
Bytes onion_peel(ByteView payload, const SessionKey& key, const SystemParams& params);

Bytes chunk_encrypt(ByteView plain, const SessionKey& key, const SystemParams& params);
Bytes chunk_encrypt_bits(ByteView data, std::uint64_t bit_length, const SessionKey& key,
                         const SystemParams& params);
Bytes chunk_decrypt(ByteView cipher, const SessionKey& key, const SystemParams& params);

// Keys innermost first (the exit hop's key first). With no keys the input is
// returned unchanged rather than packed.
Bytes onion_wrap(ByteView plain, std::span<const SessionKey> keys, const SystemParams& params);

// SHA-256 over len(raw) as 4 big-endian bytes followed by the minimal
// big-endian encoding of the raw shared secret.
KeyDigest key_digest(const SessionKey& key);

}  // namespace onionkep::onioncrypt
