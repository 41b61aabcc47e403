#pragma once

// Integer and TLV encodings shared by key files, wire formats and the
// directory protocol. All multi-byte quantities are big-endian.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "onionkep/bytes.hpp"
#include "onionkep/error.hpp"
#include "onionkep/modmath.hpp"

namespace onionkep::onioncrypt {

using modmath::Natural;

// Fixed-width big-endian encoding. Throws EncodingOverflow if v >= 256^width.
Bytes int_encode(const Natural& v, std::size_t width);
// Shortest big-endian encoding; zero encodes to the empty string.
Bytes int_encode_minimal(const Natural& v);
Natural int_decode(ByteView bytes);

// ceil(bitlen(modulus) / 8): the fixed width used for residues on the wire.
std::size_t residue_width(const Natural& modulus);

void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);

// Bounds-checked sequential reader. Every read past the end throws `code`.
class ByteReader {
 public:
  ByteReader(ByteView data, ErrorCode code) : data_(data), code_(code) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView take(std::size_t n);

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  // Throws `code` if bytes are left over.
  void expect_done() const;

 private:
  void need(std::size_t n) const;

  ByteView data_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

// TLV record: tag(1) ‖ length(4) ‖ value.
struct TlvRecord {
  std::uint8_t tag = 0;
  Bytes value;

  bool operator==(const TlvRecord&) const = default;
};

void append_tlv(Bytes& out, std::uint8_t tag, ByteView value);
void append_tlv(Bytes& out, std::uint8_t tag, const Natural& v);

// Parses a complete record stream. Truncation throws `code`.
std::vector<TlvRecord> parse_tlv(ByteView stream, ErrorCode code);

}  // namespace onionkep::onioncrypt
