#include "onionkep/nikep.hpp"

#include "onionkep/error.hpp"
#include "reference_params.hpp"

namespace onionkep::nikep {

using modmath::mod_inv;
using modmath::mod_pow;

SystemParams SystemParams::from_primes(const Natural& p, const Natural& q, const Natural& r) {
  if (r == p || r == q) {
    throw Error(ErrorCode::InvalidArgument, "r must differ from p and q");
  }
  SystemParams out;
  out.p = p;
  out.q = q;
  out.r = r;
  out.n = p * q * r;
  out.phi = modmath::totient(p, q, r);
  return out;
}

SystemParams gen_params(std::size_t r_bits, RandomSource& rng, std::size_t max_attempts) {
  if (r_bits < 4) {
    throw Error(ErrorCode::GenerationFailed, "r needs at least 4 bits, got " + std::to_string(r_bits));
  }
  const Natural r = modmath::gen_prime_with_two_primitive(r_bits, rng, max_attempts);
  return SystemParams::from_primes(2, 2, r);
}

const SystemParams& reference_params(std::size_t n_bits) {
  static const SystemParams k1024 =
      SystemParams::from_primes(2, 2, Natural(detail::kReferenceR1022, 16));
  static const SystemParams k2048 =
      SystemParams::from_primes(2, 2, Natural(detail::kReferenceR2046, 16));
  if (n_bits == 1024) return k1024;
  if (n_bits == 2048) return k2048;
  throw Error(ErrorCode::NotFound, "no reference parameters for " + std::to_string(n_bits) + "-bit n");
}

PublicConstructor derive_public(const SystemParams& params, const PrivateKey& priv) {
  // Exponent 2x on p, not x, blocks the multiplication attack on P.
  return PublicConstructor{
      mod_pow(params.p, 2 * priv.exponent, params.n) * priv.mask % params.n,
      mod_pow(params.q, priv.co_exponent, params.n) * priv.mask % params.n,
  };
}

KeyPair keypair_from(const SystemParams& params, const Natural& exponent, const Natural& mask) {
  if (exponent < 2 || exponent > params.phi - 2) {
    throw Error(ErrorCode::InvalidArgument, "exponent outside [2, phi-2]");
  }
  if (mask <= 0 || mask >= params.n || gcd(mask, params.n) != 1) {
    throw Error(ErrorCode::InvalidArgument, "mask must be a unit mod n");
  }
  KeyPair out;
  out.priv.exponent = exponent;
  out.priv.co_exponent = params.phi - exponent + 1;
  out.priv.mask = mask;
  out.pub = derive_public(params, out.priv);
  return out;
}

KeyPair gen_keypair(const SystemParams& params, RandomSource& rng, KeyPolicy policy) {
  const Natural exponent = rng.between(2, params.phi - 2);
  const Natural lo = policy.prefix_safe ? params.r + 1 : Natural(2);
  Natural mask;
  do {
    mask = rng.between(lo, params.n - 1);
  } while (gcd(mask, params.n) != 1);
  return keypair_from(params, exponent, mask);
}

bool is_consistent(const SystemParams& params, const KeyPair& keys) {
  if (keys.priv.exponent + keys.priv.co_exponent != params.phi + 1) return false;
  if (gcd(keys.priv.mask, params.n) != 1) return false;
  return derive_public(params, keys.priv) == keys.pub;
}

HandshakeValue mix(const SystemParams& params, const PublicConstructor& peer_pub,
                   const PrivateKey& own_priv) {
  // (p^{2x'} k')^{x} (q^{y'} k')^{y} = p^{2xx'} q^{yy'} k'^{phi+1}, and
  // k'^{phi+1} = k' by Euler.
  const Natural lhs = mod_pow(peer_pub.p_part, own_priv.exponent, params.n);
  const Natural rhs = mod_pow(peer_pub.q_part, own_priv.co_exponent, params.n);
  return HandshakeValue{lhs * rhs % params.n};
}

Natural strip(const SystemParams& params, const HandshakeValue& v, const Natural& own_mask) {
  return v.value * mod_inv(own_mask, params.n) % params.n;
}

SessionKey reduce(const SystemParams& params, const Natural& raw) {
  const Natural pq = params.p * params.q;
  Natural canonical = raw % params.n;
  if (canonical < 0) canonical += params.n;
  if (canonical % pq != 0) {
    throw Error(ErrorCode::MalformedSessionKey, raw.get_str() + " is not divisible by pq");
  }
  const Natural reduced = (canonical / pq) % params.r;
  if (reduced == 0) {
    throw Error(ErrorCode::MalformedSessionKey, "reduced key is zero mod r");
  }
  return SessionKey{canonical, reduced, mod_inv(reduced, params.r), params.r};
}

Natural encrypt_block(const Natural& m, const SessionKey& key) {
  if (m < 0 || m >= key.block_modulus) {
    throw Error(ErrorCode::BlockOutOfRange, "plaintext block must be below r");
  }
  return m * key.reduced % key.block_modulus;
}

Natural decrypt_block(const Natural& c, const SessionKey& key) {
  if (c < 0 || c >= key.block_modulus) {
    throw Error(ErrorCode::BlockOutOfRange, "ciphertext block must be below r");
  }
  return c * key.reduced_inv % key.block_modulus;
}

Natural prefix_recover(const SystemParams& params, const Natural& c1, const Natural& c2) {
  const Natural pq = params.p * params.q;
  if (c1 % pq != 0 || c2 % pq != 0) {
    throw Error(ErrorCode::MalformedCapture, "captures must be divisible by pq");
  }
  const Natural prefix = (c1 / pq) % params.r;
  if (prefix == 0) throw Error(ErrorCode::DegenerateCapture, "prefix vanishes mod r");
  const Natural extended = (c2 / pq) % params.r;
  return mod_inv(prefix, params.r) * extended % params.r;
}

KeySizes key_sizes_for_modulus_bits(std::size_t n_bits) {
  const std::size_t width = (n_bits + 7) / 8;
  constexpr std::size_t kParamsReference = 32;
  // Public: P and Q. Private: exponent and mask plus a digest naming the
  // parameter set; the co-exponent is derivable.
  return KeySizes{2 * width, 2 * width + kParamsReference};
}

KeySizes key_sizes(const SystemParams& params) {
  return key_sizes_for_modulus_bits(modmath::bit_length(params.n));
}

}  // namespace onionkep::nikep
