#include "onionkep/modmath.hpp"

#include <array>
#include <vector>

#include "onionkep/error.hpp"

namespace onionkep::modmath {

namespace {

// Rounds used while filtering candidates; survivors are re-checked with the
// full kPrimalityRounds.
constexpr int kFilterRounds = 25;
constexpr std::size_t kEnumerateBits = 16;

const std::vector<unsigned long>& small_primes() {
  static const std::vector<unsigned long> primes = [] {
    constexpr unsigned long kLimit = 4096;
    std::vector<bool> composite(kLimit, false);
    std::vector<unsigned long> out;
    for (unsigned long i = 2; i < kLimit; ++i) {
      if (composite[i]) continue;
      out.push_back(i);
      for (unsigned long j = i * i; j < kLimit; j += i) composite[j] = true;
    }
    return out;
  }();
  return primes;
}

// False when v has a small factor other than itself.
bool passes_trial_division(const Natural& v) {
  for (unsigned long prime : small_primes()) {
    if (v == prime) return true;
    if (mpz_divisible_ui_p(v.get_mpz_t(), prime) != 0) return false;
  }
  return true;
}

}  // namespace

Natural RandomSource::bits(std::size_t bits) {
  Natural out = 0;
  std::size_t produced = 0;
  while (produced < bits) {
    out <<= 64;
    out += Natural(static_cast<unsigned long>(next_u64()));
    produced += 64;
  }
  if (produced > bits) out >>= (produced - bits);
  return out;
}

Natural RandomSource::below(const Natural& bound) {
  if (bound <= 0) throw Error(ErrorCode::InvalidArgument, "random bound must be positive");
  const std::size_t width = bit_length(bound);
  for (;;) {
    Natural candidate = bits(width);
    if (candidate < bound) return candidate;
  }
}

Natural RandomSource::between(const Natural& lo, const Natural& hi) {
  if (lo > hi) throw Error(ErrorCode::InvalidArgument, "empty random range");
  Natural span = hi - lo + 1;
  return lo + below(span);
}

std::uint64_t SystemRandom::next_u64() {
  return (static_cast<std::uint64_t>(device_()) << 32) ^ device_();
}

std::size_t bit_length(const Natural& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

Natural mod_pow(const Natural& base, const Natural& exp, const Natural& modulus) {
  if (modulus < 2) throw Error(ErrorCode::InvalidModulus, "modulus must be at least 2");
  if (exp < 0) throw Error(ErrorCode::InvalidArgument, "negative exponent");
  Natural out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), modulus.get_mpz_t());
  return out;
}

Natural mod_inv(const Natural& a, const Natural& modulus) {
  if (modulus < 2) throw Error(ErrorCode::InvalidModulus, "modulus must be at least 2");

  // Invariant: old_s * a ≡ old_r (mod modulus), likewise for (s, r).
  Natural old_r = a % modulus;
  if (old_r < 0) old_r += modulus;
  Natural r = modulus;
  Natural old_s = 1;
  Natural s = 0;
  while (r != 0) {
    Natural quotient = old_r / r;
    Natural next_r = old_r - quotient * r;
    old_r = r;
    r = next_r;
    Natural next_s = old_s - quotient * s;
    old_s = s;
    s = next_s;
  }
  if (old_r != 1) {
    throw Error(ErrorCode::NonInvertible,
                a.get_str() + " shares a factor with " + modulus.get_str());
  }
  Natural out = old_s % modulus;
  if (out < 0) out += modulus;
  return out;
}

bool is_probable_prime(const Natural& candidate, int rounds) {
  if (candidate < 2) return false;
  return mpz_probab_prime_p(candidate.get_mpz_t(), rounds) != 0;
}

Natural totient(const Natural& p, const Natural& q, const Natural& r) {
  const std::array<Natural, 3> factors{p, q, r};
  for (const auto& f : factors) {
    if (!is_probable_prime(f)) throw Error(ErrorCode::NotPrime, f.get_str() + " is not prime");
  }

  // φ(Π f^e) = Π f^(e-1) (f-1); group the (at most three) equal factors.
  Natural out = 1;
  std::array<bool, 3> seen{false, false, false};
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (seen[i]) continue;
    unsigned exponent = 0;
    for (std::size_t j = i; j < factors.size(); ++j) {
      if (factors[j] == factors[i]) {
        seen[j] = true;
        ++exponent;
      }
    }
    Natural term = factors[i] - 1;
    for (unsigned e = 1; e < exponent; ++e) term *= factors[i];
    out *= term;
  }
  return out;
}

bool is_primitive_root_two(const Natural& r) {
  if (r < 5 || mpz_even_p(r.get_mpz_t()) != 0 || !is_probable_prime(r)) {
    throw Error(ErrorCode::UnsupportedShape, r.get_str() + " is not an odd prime of safe-prime form");
  }
  const Natural s = (r - 1) / 2;
  if (!is_probable_prime(s)) {
    throw Error(ErrorCode::UnsupportedShape, r.get_str() + " is not a safe prime");
  }
  // The group has order 2s, so the order of 2 is one of 1, 2, s, 2s. 2 ≢ ±1
  // for r ≥ 5, and 2^s ≡ -1 rules out order s.
  return mod_pow(2, s, r) == r - 1;
}

Natural gen_prime_with_two_primitive(std::size_t bits, RandomSource& rng,
                                     std::size_t max_attempts) {
  if (bits < 3) {
    throw Error(ErrorCode::GenerationFailed, "no safe prime with 2 as primitive root below 3 bits");
  }

  // r = 2s + 1 has `bits` bits iff s has bits-1 bits. For bits >= 4, s is an
  // odd prime and 2 can only be a primitive root when r ≡ 3 (mod 8), that is
  // s ≡ 1 (mod 4); other residues are skipped without testing.
  const std::size_t s_bits = bits - 1;
  const Natural s_top = Natural(1) << (s_bits - 1);

  if (bits <= kEnumerateBits) {
    // Small ranges are listed outright; some sizes (5 bits) have no member.
    std::vector<Natural> found;
    for (Natural s = s_top; s < 2 * s_top; ++s) {
      const Natural r = 2 * s + 1;
      if (is_probable_prime(s) && is_probable_prime(r) && mod_pow(2, s, r) == r - 1) found.push_back(r);
    }
    if (found.empty()) {
      throw Error(ErrorCode::GenerationFailed,
                  "no " + std::to_string(bits) + "-bit safe prime has 2 as a primitive root");
    }
    return found[rng.below(found.size()).get_ui()];
  }

  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    Natural s = s_top + rng.bits(s_bits - 1);
    if (bits >= 4) {
      s -= s % 4;
      s += 1;
    }
    const Natural r = 2 * s + 1;
    if (!passes_trial_division(s) || !passes_trial_division(r)) continue;
    if (!is_probable_prime(s, kFilterRounds) || !is_probable_prime(r, kFilterRounds)) continue;
    if (mod_pow(2, s, r) != r - 1) continue;
    if (is_probable_prime(s) && is_probable_prime(r)) return r;
  }
  throw Error(ErrorCode::GenerationFailed,
              "no " + std::to_string(bits) + "-bit safe prime found within the attempt budget");
}

}  // namespace onionkep::modmath
