#include "onionkep/keyfile.hpp"

#include <fstream>
#include <iterator>
#include <map>

#include "digest.hpp"
#include "onionkep/codec.hpp"
#include "onionkep/error.hpp"

namespace onionkep::nikep {

using onioncrypt::append_tlv;
using onioncrypt::int_decode;

namespace {

void append_params(Bytes& out, const SystemParams& params) {
  append_tlv(out, tag::kP, params.p);
  append_tlv(out, tag::kQ, params.q);
  append_tlv(out, tag::kR, params.r);
}

}  // namespace

Bytes encode_params(const SystemParams& params) {
  Bytes out;
  append_params(out, params);
  return out;
}

std::array<std::uint8_t, 32> params_digest(const SystemParams& params) {
  return detail::sha256(encode_params(params));
}

Bytes encode_public_key(const SystemParams& params, const PublicConstructor& pub) {
  Bytes out = encode_params(params);
  append_tlv(out, tag::kPublicP, pub.p_part);
  append_tlv(out, tag::kPublicQ, pub.q_part);
  return out;
}

Bytes encode_private_key(const SystemParams& params, const KeyPair& keys) {
  Bytes out = encode_params(params);
  append_tlv(out, tag::kExponent, keys.priv.exponent);
  append_tlv(out, tag::kMask, keys.priv.mask);
  append_tlv(out, tag::kPublicP, keys.pub.p_part);
  append_tlv(out, tag::kPublicQ, keys.pub.q_part);
  return out;
}

KeyFile decode_key_file(ByteView data) {
  std::map<std::uint8_t, Natural> fields;
  for (const auto& record : onioncrypt::parse_tlv(data, ErrorCode::MalformedKeyFile)) {
    switch (record.tag) {
      case tag::kP:
      case tag::kQ:
      case tag::kR:
      case tag::kExponent:
      case tag::kMask:
      case tag::kPublicP:
      case tag::kPublicQ:
        break;
      default:
        throw Error(ErrorCode::MalformedKeyFile, "unknown tag " + std::to_string(record.tag));
    }
    if (!fields.emplace(record.tag, int_decode(record.value)).second) {
      throw Error(ErrorCode::MalformedKeyFile, "duplicate tag " + std::to_string(record.tag));
    }
  }

  auto require = [&](std::uint8_t t) -> const Natural& {
    auto it = fields.find(t);
    if (it == fields.end()) throw Error(ErrorCode::MalformedKeyFile, "missing tag " + std::to_string(t));
    return it->second;
  };

  KeyFile out;
  try {
    out.params = SystemParams::from_primes(require(tag::kP), require(tag::kQ), require(tag::kR));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedKeyFile) throw;
    throw Error(ErrorCode::MalformedKeyFile, std::string("bad parameters: ") + e.what());
  }
  out.pub = PublicConstructor{require(tag::kPublicP), require(tag::kPublicQ)};
  if (out.pub.p_part >= out.params.n || out.pub.q_part >= out.params.n) {
    throw Error(ErrorCode::MalformedKeyFile, "public constructor not reduced mod n");
  }

  const bool has_exponent = fields.contains(tag::kExponent);
  const bool has_mask = fields.contains(tag::kMask);
  if (has_exponent != has_mask) {
    throw Error(ErrorCode::MalformedKeyFile, "private key needs both exponent and mask");
  }
  if (has_exponent) {
    KeyPair keys;
    try {
      keys = keypair_from(out.params, fields.at(tag::kExponent), fields.at(tag::kMask));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedKeyFile, std::string("bad private key: ") + e.what());
    }
    if (keys.pub != out.pub) {
      throw Error(ErrorCode::MalformedKeyFile, "private key does not match public constructor");
    }
    out.priv = keys.priv;
  }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace onionkep::nikep
