#pragma once

// Non-invertible key exchange over n = p*q*r.
//
// A public constructor is the pair (p^{2x} k, q^{y} k) mod n where x is a
// random exponent, y = phi(n) - x + 1 and k is a unit mod n. Raising the
// peer's constructor to (x, y) and multiplying yields the shared secret still
// masked by the peer's k (k^{phi+1} = k); the peer strips its own k with an
// inverse. The resulting secret is divisible by p*q, hence non-invertible mod
// n, and is reduced to a unit mod r for use as a multiplicative block cipher
// key.

#include <cstddef>

#include "onionkep/modmath.hpp"

namespace onionkep::nikep {

using modmath::Natural;
using modmath::RandomSource;

struct SystemParams {
  Natural p;
  Natural q;
  Natural r;
  Natural n;
  Natural phi;

  // Validates primality and r ∉ {p, q}; computes n and phi.
  static SystemParams from_primes(const Natural& p, const Natural& q, const Natural& r);

  bool operator==(const SystemParams&) const = default;
};

// (P, Q) = (p^{2x} k mod n, q^{y} k mod n).
struct PublicConstructor {
  Natural p_part;
  Natural q_part;

  bool operator==(const PublicConstructor&) const = default;
};

struct PrivateKey {
  Natural exponent;     // x, in [2, phi-2]
  Natural co_exponent;  // y = phi - x + 1
  Natural mask;         // k, a unit mod n

  bool operator==(const PrivateKey&) const = default;
};

struct KeyPair {
  PublicConstructor pub;
  PrivateKey priv;

  bool operator==(const KeyPair&) const = default;
};

// Shared secret multiplied by one party's mask.
struct HandshakeValue {
  Natural value;

  bool operator==(const HandshakeValue&) const = default;
};

struct SessionKey {
  Natural raw;          // k_s mod n, divisible by p*q
  Natural reduced;      // (raw / pq) mod r
  Natural reduced_inv;  // reduced^{-1} mod r
  Natural block_modulus;  // r

  bool operator==(const SessionKey&) const = default;
};

struct KeyPolicy {
  // Draw the mask from (r, n) so a captured prefix only leaks k mod r.
  bool prefix_safe = true;
};

struct KeySizes {
  std::size_t public_bytes = 0;
  std::size_t private_bytes = 0;
};

// p = q = 2 and r a safe prime of r_bits bits with 2 as a primitive root.
SystemParams gen_params(std::size_t r_bits, RandomSource& rng,
                        std::size_t max_attempts = modmath::kDefaultPrimeAttempts);

// Frozen parameter sets with bitlen(n) of 1024 or 2048; throws NotFound
// for other sizes.
const SystemParams& reference_params(std::size_t n_bits);

KeyPair gen_keypair(const SystemParams& params, RandomSource& rng, KeyPolicy policy = {});

// Builds a keypair from explicit private values. The exponent must lie in
// [2, phi-2] and the mask must be a unit mod n (InvalidArgument otherwise).
KeyPair keypair_from(const SystemParams& params, const Natural& exponent, const Natural& mask);

PublicConstructor derive_public(const SystemParams& params, const PrivateKey& priv);

// Recomputes the constructor from the private half and compares.
bool is_consistent(const SystemParams& params, const KeyPair& keys);

HandshakeValue mix(const SystemParams& params, const PublicConstructor& peer_pub,
                   const PrivateKey& own_priv);

// v * own_mask^{-1} mod n. Throws NonInvertible for a bad mask.
Natural strip(const SystemParams& params, const HandshakeValue& v, const Natural& own_mask);

// Throws MalformedSessionKey unless raw ≡ 0 (mod pq).
SessionKey reduce(const SystemParams& params, const Natural& raw);

// c = m * k_r mod r. Throws BlockOutOfRange when m >= r.
Natural encrypt_block(const Natural& m, const SessionKey& key);
// m = c * k_r^{-1} mod r. Throws BlockOutOfRange when c >= r.
Natural decrypt_block(const Natural& c, const SessionKey& key);

// Eavesdropper's view of two captures sharing a prefix: c1 = w*k_m and
// c2 = w*k_m*k_n (mod n) where pq | w. Dividing both by pq moves the problem
// to Z_r, where the prefix is a unit, and the quotient leaks k_n mod r.
Natural prefix_recover(const SystemParams& params, const Natural& c1, const Natural& c2);

KeySizes key_sizes(const SystemParams& params);
KeySizes key_sizes_for_modulus_bits(std::size_t n_bits);

}  // namespace onionkep::nikep
