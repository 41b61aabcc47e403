#pragma once

// Key files are TLV streams: tag(1) ‖ length(4, big-endian) ‖ value, where
// every value is a minimal big-endian integer. n and phi are never stored.
//
//   0x01 p   0x02 q   0x03 r   0x05 x   0x06 k   0x07 P   0x08 Q
//
// Public files hold {p, q, r, P, Q}; private files add {x, k}.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "onionkep/bytes.hpp"
#include "onionkep/nikep.hpp"

namespace onionkep::nikep {

namespace tag {
inline constexpr std::uint8_t kP = 0x01;
inline constexpr std::uint8_t kQ = 0x02;
inline constexpr std::uint8_t kR = 0x03;
inline constexpr std::uint8_t kExponent = 0x05;
inline constexpr std::uint8_t kMask = 0x06;
inline constexpr std::uint8_t kPublicP = 0x07;
inline constexpr std::uint8_t kPublicQ = 0x08;
}  // namespace tag

struct KeyFile {
  SystemParams params;
  PublicConstructor pub;
  std::optional<PrivateKey> priv;
};

Bytes encode_params(const SystemParams& params);
// SHA-256 of encode_params; identifies a parameter set in descriptors.
std::array<std::uint8_t, 32> params_digest(const SystemParams& params);

Bytes encode_public_key(const SystemParams& params, const PublicConstructor& pub);
Bytes encode_private_key(const SystemParams& params, const KeyPair& keys);

// Parses either flavour. Missing, duplicate or unknown tags, and private
// halves that do not reproduce the public constructor, throw MalformedKeyFile.
KeyFile decode_key_file(ByteView data);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

}  // namespace onionkep::nikep
