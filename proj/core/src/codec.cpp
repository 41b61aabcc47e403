#include "onionkep/codec.hpp"

#include <algorithm>

namespace onionkep {

std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (std::uint8_t byte : b) {
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0x0f]);
  }
  return out;
}

}  // namespace onionkep

namespace onionkep::onioncrypt {

Bytes int_encode_minimal(const Natural& v) {
  if (v < 0) throw Error(ErrorCode::EncodingOverflow, "negative integer");
  if (v == 0) return {};
  Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  out.resize(written);
  return out;
}

Bytes int_encode(const Natural& v, std::size_t width) {
  Bytes minimal = int_encode_minimal(v);
  if (minimal.size() > width) {
    throw Error(ErrorCode::EncodingOverflow,
                v.get_str() + " does not fit in " + std::to_string(width) + " bytes");
  }
  Bytes out(width - minimal.size(), 0);
  out.insert(out.end(), minimal.begin(), minimal.end());
  return out;
}

Natural int_decode(ByteView bytes) {
  Natural out = 0;
  if (!bytes.empty()) mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return out;
}

std::size_t residue_width(const Natural& modulus) {
  return (modmath::bit_length(modulus) + 7) / 8;
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw Error(code_, "need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()));
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
  need(2);
  auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

ByteView ByteReader::take(std::size_t n) {
  need(n);
  ByteView out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_done() const {
  if (!done()) throw Error(code_, std::to_string(remaining()) + " trailing bytes");
}

void append_tlv(Bytes& out, std::uint8_t tag, ByteView value) {
  if (value.size() > 0xffffffffULL) throw Error(ErrorCode::EncodingOverflow, "TLV value too long");
  out.push_back(tag);
  put_u32(out, static_cast<std::uint32_t>(value.size()));
  out.insert(out.end(), value.begin(), value.end());
}

void append_tlv(Bytes& out, std::uint8_t tag, const Natural& v) {
  append_tlv(out, tag, int_encode_minimal(v));
}

std::vector<TlvRecord> parse_tlv(ByteView stream, ErrorCode code) {
  std::vector<TlvRecord> out;
  ByteReader reader(stream, code);
  while (!reader.done()) {
    TlvRecord record;
    record.tag = reader.u8();
    const std::uint32_t length = reader.u32();
    ByteView value = reader.take(length);
    record.value.assign(value.begin(), value.end());
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace onionkep::onioncrypt
