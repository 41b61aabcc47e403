#pragma once

// Arbitrary-precision modular arithmetic and the number-theoretic helpers
// used by the key exchange: exponentiation, inverses, totients, primality
// and safe-prime generation with 2 as a primitive root.

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <random>

namespace onionkep::modmath {

using Natural = mpz_class;

constexpr int kPrimalityRounds = 64;
constexpr std::size_t kDefaultPrimeAttempts = 2'000'000;

// Source of random 64-bit words. Everything that draws randomness takes one
// of these by reference so tests can inject a seeded generator.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual std::uint64_t next_u64() = 0;

  // Uniform in [0, 2^bits).
  Natural bits(std::size_t bits);
  // Uniform in [0, bound); bound must be positive.
  Natural below(const Natural& bound);
  // Uniform in [lo, hi]; requires lo <= hi.
  Natural between(const Natural& lo, const Natural& hi);
};

class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Non-deterministic; backed by std::random_device.
class SystemRandom final : public RandomSource {
 public:
  std::uint64_t next_u64() override;

 private:
  std::random_device device_;
};

std::size_t bit_length(const Natural& v);

// base^exp mod modulus. Throws InvalidModulus when modulus < 2.
Natural mod_pow(const Natural& base, const Natural& exp, const Natural& modulus);

// Inverse of a modulo modulus by the extended Euclidean algorithm, result in
// [1, modulus). Throws NonInvertible when gcd(a, modulus) != 1.
Natural mod_inv(const Natural& a, const Natural& modulus);

bool is_probable_prime(const Natural& candidate, int rounds = kPrimalityRounds);

// Euler's totient of n = p*q*r computed from the factorization, so repeated
// factors are handled: p = q gives p*(p-1)*(r-1). Throws NotPrime.
Natural totient(const Natural& p, const Natural& q, const Natural& r);

// True iff 2 has order r-1 modulo r. Only safe primes r = 2s+1 are
// supported; anything else throws UnsupportedShape.
bool is_primitive_root_two(const Natural& r);

// Random safe prime of exactly `bits` bits for which 2 is a primitive root.
// Sizes up to 16 bits are enumerated, so a size with no such prime (3 is the
// floor; 5 bits has none) fails at once. Larger sizes throw GenerationFailed
// once `max_attempts` candidates have been rejected.
Natural gen_prime_with_two_primitive(std::size_t bits, RandomSource& rng,
                                     std::size_t max_attempts = kDefaultPrimeAttempts);

}  // namespace onionkep::modmath
