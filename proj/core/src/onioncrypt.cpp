#include "onionkep/onioncrypt.hpp"

#include <openssl/evp.h>

#include "digest.hpp"
#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"

namespace onionkep::detail {

std::array<std::uint8_t, 32> sha256(ByteView data) {
  std::array<std::uint8_t, 32> out{};
  unsigned int written = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &written, EVP_sha256(), nullptr) != 1 ||
      written != out.size()) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  return out;
}

}  // namespace onionkep::detail

namespace onionkep::onioncrypt {

namespace {

struct ParsedPayload {
  std::uint64_t bit_length;
  std::vector<Natural> blocks;
};

std::size_t block_count(std::uint64_t bit_length, const BlockLayout& layout) {
  return static_cast<std::size_t>((bit_length + layout.plain_bits - 1) / layout.plain_bits);
}

ParsedPayload parse_payload(ByteView payload, const SystemParams& params) {
  const BlockLayout layout = block_layout(params);
  ByteReader reader(payload, ErrorCode::MalformedPayload);
  ParsedPayload out;
  out.bit_length = reader.u64();
  if (reader.remaining() % layout.block_bytes != 0) {
    throw Error(ErrorCode::MalformedPayload, "payload is not block aligned");
  }
  const std::size_t count = reader.remaining() / layout.block_bytes;
  if (count != block_count(out.bit_length, layout)) {
    throw Error(ErrorCode::MalformedPayload, "block count disagrees with declared bit length");
  }
  out.blocks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Natural block = int_decode(reader.take(layout.block_bytes));
    if (block >= params.r) throw Error(ErrorCode::MalformedPayload, "block not below r");
    out.blocks.push_back(std::move(block));
  }
  return out;
}

Bytes serialize_payload(const ParsedPayload& payload, const SystemParams& params) {
  const BlockLayout layout = block_layout(params);
  Bytes out;
  out.reserve(kPayloadHeaderBytes + payload.blocks.size() * layout.block_bytes);
  put_u64(out, payload.bit_length);
  for (const auto& block : payload.blocks) {
    Bytes encoded = int_encode(block, layout.block_bytes);
    out.insert(out.end(), encoded.begin(), encoded.end());
  }
  return out;
}

bool bit_at(ByteView data, std::uint64_t index) {
  return ((data[index / 8] >> (7 - index % 8)) & 1U) != 0;
}

}  // namespace

BlockLayout block_layout(const SystemParams& params) {
  const std::size_t r_bits = modmath::bit_length(params.r);
  if (r_bits < 2) throw Error(ErrorCode::InvalidArgument, "r too small for block encoding");
  return BlockLayout{r_bits - 1, (r_bits + 7) / 8};
}

std::size_t payload_size(std::uint64_t bit_length, const SystemParams& params) {
  const BlockLayout layout = block_layout(params);
  return kPayloadHeaderBytes + block_count(bit_length, layout) * layout.block_bytes;
}

Bytes pack_payload(ByteView data, std::uint64_t bit_length, const SystemParams& params) {
  if (bit_length > static_cast<std::uint64_t>(data.size()) * 8) {
    throw Error(ErrorCode::InvalidArgument, "bit length exceeds data");
  }
  const BlockLayout layout = block_layout(params);
  ParsedPayload payload{bit_length, {}};
  const std::size_t count = block_count(bit_length, layout);
  payload.blocks.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    Natural& block = payload.blocks[i];
    for (std::size_t j = 0; j < layout.plain_bits; ++j) {
      const std::uint64_t index = static_cast<std::uint64_t>(i) * layout.plain_bits + j;
      if (index >= bit_length) break;
      if (bit_at(data, index)) mpz_setbit(block.get_mpz_t(), layout.plain_bits - 1 - j);
    }
  }
  return serialize_payload(payload, params);
}

Bytes unpack_payload(ByteView payload, const SystemParams& params) {
  const BlockLayout layout = block_layout(params);
  const ParsedPayload parsed = parse_payload(payload, params);
  const Natural limit = Natural(1) << layout.plain_bits;
  Bytes out(static_cast<std::size_t>((parsed.bit_length + 7) / 8), 0);
  for (std::size_t i = 0; i < parsed.blocks.size(); ++i) {
    const Natural& block = parsed.blocks[i];
    if (block >= limit) throw Error(ErrorCode::MalformedPayload, "block wider than a plaintext block");
    for (std::size_t j = 0; j < layout.plain_bits; ++j) {
      const std::uint64_t index = static_cast<std::uint64_t>(i) * layout.plain_bits + j;
      const bool set = mpz_tstbit(block.get_mpz_t(), layout.plain_bits - 1 - j) != 0;
      if (index >= parsed.bit_length) {
        if (set) throw Error(ErrorCode::MalformedPayload, "padding bits must be zero");
        continue;
      }
      if (set) out[index / 8] |= static_cast<std::uint8_t>(0x80U >> (index % 8));
    }
  }
  return out;
}

Bytes add_layer(ByteView payload, const SessionKey& key, const SystemParams& params) {
  ParsedPayload parsed = parse_payload(payload, params);
  for (auto& block : parsed.blocks) block = nikep::encrypt_block(block, key);
  return serialize_payload(parsed, params);
}

Bytes onion_peel(ByteView payload, const SessionKey& key, const SystemParams& params) {
  ParsedPayload parsed = parse_payload(payload, params);
  for (auto& block : parsed.blocks) block = nikep::decrypt_block(block, key);
  return serialize_payload(parsed, params);
}

Bytes chunk_encrypt_bits(ByteView data, std::uint64_t bit_length, const SessionKey& key,
                         const SystemParams& params) {
  return add_layer(pack_payload(data, bit_length, params), key, params);
}

Bytes chunk_encrypt(ByteView plain, const SessionKey& key, const SystemParams& params) {
  return chunk_encrypt_bits(plain, static_cast<std::uint64_t>(plain.size()) * 8, key, params);
}

Bytes chunk_decrypt(ByteView cipher, const SessionKey& key, const SystemParams& params) {
  return unpack_payload(onion_peel(cipher, key, params), params);
}

Bytes onion_wrap(ByteView plain, std::span<const SessionKey> keys, const SystemParams& params) {
  if (keys.empty()) return Bytes(plain.begin(), plain.end());
  Bytes payload = pack_payload(plain, static_cast<std::uint64_t>(plain.size()) * 8, params);
  for (const auto& key : keys) payload = add_layer(payload, key, params);
  return payload;
}

KeyDigest key_digest(const SessionKey& key) {
  const Bytes raw = int_encode_minimal(key.raw);
  Bytes input;
  input.reserve(4 + raw.size());
  put_u32(input, static_cast<std::uint32_t>(raw.size()));
  input.insert(input.end(), raw.begin(), raw.end());
  return detail::sha256(input);
}

}  // namespace onionkep::onioncrypt
