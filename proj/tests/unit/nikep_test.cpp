#include <gtest/gtest.h>

#include "onionkep/error.hpp"
#include "onionkep/nikep.hpp"
#include "oracles.hpp"

namespace onionkep {
namespace {

using modmath::Natural;
using nikep::SystemParams;
using testing::toy_alice;
using testing::toy_bob;
using testing::toy_params;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(Params, ToyInstance) {
  const SystemParams params = toy_params();
  EXPECT_EQ(params.n, 44);
  EXPECT_EQ(params.phi, 20);
}

TEST(Params, DistinctPrimes) {
  const SystemParams params = SystemParams::from_primes(3, 5, 7);
  EXPECT_EQ(params.n, 105);
  EXPECT_EQ(params.phi, 48);
}

TEST(Params, RejectsRepeatedR) {
  EXPECT_EQ(code_of([] { SystemParams::from_primes(2, 3, 3); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { SystemParams::from_primes(2, 2, 15); }), ErrorCode::NotPrime);
}

TEST(Params, GeneratedShape) {
  modmath::SeededRandom rng(21);
  for (std::size_t bits : {4, 6, 16, 64, 128}) {
    const SystemParams params = nikep::gen_params(bits, rng);
    EXPECT_EQ(params.p, 2);
    EXPECT_EQ(params.q, 2);
    EXPECT_EQ(modmath::bit_length(params.r), bits);
    EXPECT_EQ(params.n, 4 * params.r);
    EXPECT_EQ(params.phi, 2 * (params.r - 1));
    EXPECT_TRUE(modmath::is_primitive_root_two(params.r));
  }
}

TEST(Params, TooSmallFails) {
  modmath::SeededRandom rng(1);
  EXPECT_EQ(code_of([&] { nikep::gen_params(3, rng); }), ErrorCode::GenerationFailed);
}

TEST(Params, ReferenceSets) {
  for (std::size_t n_bits : {1024, 2048}) {
    const SystemParams& params = nikep::reference_params(n_bits);
    EXPECT_EQ(modmath::bit_length(params.n), n_bits);
    EXPECT_TRUE(modmath::is_probable_prime(params.r));
    EXPECT_TRUE(modmath::is_probable_prime((params.r - 1) / 2));
    EXPECT_TRUE(modmath::is_primitive_root_two(params.r));
  }
  EXPECT_EQ(code_of([] { nikep::reference_params(512); }), ErrorCode::NotFound);
}

TEST(Keys, ToyConstructors) {
  const auto a = toy_alice();
  const auto b = toy_bob();
  EXPECT_EQ(a.priv.co_exponent, 18);
  EXPECT_EQ(a.pub.p_part, 40);
  EXPECT_EQ(a.pub.q_part, 28);
  EXPECT_EQ(b.priv.co_exponent, 16);
  EXPECT_EQ(b.pub.p_part, 4);
  EXPECT_EQ(b.pub.q_part, 36);
}

TEST(Keys, ConstructorMatchesOracle) {
  const SystemParams& params = testing::seeded_params(64);
  modmath::SeededRandom rng(22);
  for (int i = 0; i < 50; ++i) {
    const auto keys = nikep::gen_keypair(params, rng);
    const Natural& x = keys.priv.exponent;
    EXPECT_EQ(keys.pub.p_part,
              testing::naive_pow(2, 2 * x, params.n) * keys.priv.mask % params.n);
    EXPECT_EQ(keys.pub.q_part,
              testing::naive_pow(2, params.phi - x + 1, params.n) * keys.priv.mask % params.n);
    EXPECT_TRUE(nikep::is_consistent(params, keys));
  }
}

TEST(Keys, ExplicitValuesValidated) {
  const SystemParams params = toy_params();
  EXPECT_EQ(code_of([&] { nikep::keypair_from(params, 1, 13); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { nikep::keypair_from(params, 19, 13); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { nikep::keypair_from(params, 3, 22); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { nikep::keypair_from(params, 3, 44); }), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(nikep::keypair_from(params, 2, 1));
  EXPECT_NO_THROW(nikep::keypair_from(params, 18, 43));
}

TEST(Keys, TamperedPairIsInconsistent) {
  auto keys = toy_alice();
  keys.pub.q_part = 29;
  EXPECT_FALSE(nikep::is_consistent(toy_params(), keys));
}

TEST(Keys, PolicyControlsMaskRange) {
  const SystemParams& params = testing::seeded_params(16);
  modmath::SeededRandom rng(23);
  bool saw_small = false;
  for (int i = 0; i < 400; ++i) {
    const auto safe = nikep::gen_keypair(params, rng, {.prefix_safe = true});
    ASSERT_GT(safe.priv.mask, params.r);
    ASSERT_LT(safe.priv.mask, params.n);
    const auto loose = nikep::gen_keypair(params, rng, {.prefix_safe = false});
    ASSERT_EQ(gcd(loose.priv.mask, params.n), 1);
    saw_small = saw_small || loose.priv.mask < params.r;
  }
  EXPECT_TRUE(saw_small);
}

TEST(Exchange, ToyHandshake) {
  const SystemParams params = toy_params();
  const auto a = toy_alice();
  const auto b = toy_bob();
  const auto v_ab = nikep::mix(params, b.pub, a.priv);
  const auto v_ba = nikep::mix(params, a.pub, b.priv);
  EXPECT_EQ(v_ab.value, 12);
  EXPECT_EQ(v_ba.value, 28);
  EXPECT_EQ(nikep::strip(params, v_ab, b.priv.mask), 36);
  EXPECT_EQ(nikep::strip(params, v_ba, a.priv.mask), 36);

  const auto key = nikep::reduce(params, 36);
  EXPECT_EQ(key.raw, 36);
  EXPECT_EQ(key.reduced, 9);
  EXPECT_EQ(key.reduced_inv, 5);
  EXPECT_EQ(nikep::encrypt_block(7, key), 8);
  EXPECT_EQ(nikep::decrypt_block(8, key), 7);
}

TEST(Exchange, RandomPairsAgreeWithOracle) {
  modmath::SeededRandom rng(24);
  for (std::size_t bits : {4, 16, 64, 256}) {
    const SystemParams& params = testing::seeded_params(bits);
    for (int i = 0; i < 30; ++i) {
      const auto a = nikep::gen_keypair(params, rng);
      const auto b = nikep::gen_keypair(params, rng);
      const Natural at_b = nikep::strip(params, nikep::mix(params, b.pub, a.priv), b.priv.mask);
      const Natural at_a = nikep::strip(params, nikep::mix(params, a.pub, b.priv), a.priv.mask);
      ASSERT_EQ(at_a, at_b);
      ASSERT_EQ(at_a, testing::shared_secret_oracle(params, a.priv, b.priv));
      ASSERT_EQ(at_a % 4, 0);
    }
  }
}

TEST(Exchange, StripWithWrongMaskBreaksAgreement) {
  const SystemParams params = toy_params();
  const auto v = nikep::mix(params, toy_bob().pub, toy_alice().priv);
  EXPECT_NE(nikep::strip(params, v, 13), 36);
  EXPECT_EQ(code_of([&] { nikep::strip(params, v, 22); }), ErrorCode::NonInvertible);
}

TEST(Reduce, RejectsValuesNotDivisibleByPq) {
  const SystemParams params = toy_params();
  EXPECT_EQ(nikep::strip(params, {35}, 15), 17);
  EXPECT_EQ(code_of([&] { nikep::reduce(params, 17); }), ErrorCode::MalformedSessionKey);
  EXPECT_EQ(code_of([&] { nikep::reduce(params, 0); }), ErrorCode::MalformedSessionKey);
  EXPECT_EQ(code_of([&] { nikep::reduce(params, 44); }), ErrorCode::MalformedSessionKey);
}

TEST(Reduce, NormalisesIntoRange) {
  const auto key = nikep::reduce(toy_params(), 36 + 44 * 3);
  EXPECT_EQ(key.raw, 36);
  EXPECT_EQ(key.reduced, 9);
}

TEST(Cipher, ExhaustiveToyRoundTrip) {
  const SystemParams params = toy_params();
  for (int raw = 4; raw < 44; raw += 4) {
    const auto key = nikep::reduce(params, raw);
    for (int m = 0; m < 11; ++m) {
      const Natural c = nikep::encrypt_block(m, key);
      EXPECT_LT(c, 11);
      EXPECT_EQ(nikep::decrypt_block(c, key), m);
    }
  }
}

TEST(Cipher, RejectsOutOfRangeBlocks) {
  const auto key = nikep::reduce(toy_params(), 36);
  EXPECT_EQ(code_of([&] { nikep::encrypt_block(11, key); }), ErrorCode::BlockOutOfRange);
  EXPECT_EQ(code_of([&] { nikep::decrypt_block(-1, key); }), ErrorCode::BlockOutOfRange);
}

TEST(Cipher, MultiplicativeHomomorphism) {
  const SystemParams& params = testing::seeded_params(64);
  modmath::SeededRandom rng(25);
  for (int i = 0; i < 100; ++i) {
    const auto ka = nikep::reduce(params, 4 * rng.between(1, params.r - 1));
    const auto kb = nikep::reduce(params, 4 * rng.between(1, params.r - 1));
    const auto kab = nikep::reduce(params, 4 * (ka.reduced * kb.reduced % params.r));
    const Natural m = rng.below(params.r);
    const Natural c = nikep::encrypt_block(m, kab);
    EXPECT_EQ(c * ka.reduced_inv % params.r, nikep::encrypt_block(m, kb));
    EXPECT_EQ(c * kb.reduced_inv % params.r, nikep::encrypt_block(m, ka));
  }
}

TEST(PrefixAttack, ToyCaptures) {
  const SystemParams params = toy_params();
  EXPECT_EQ(nikep::prefix_recover(params, 16, 24), 7);
  EXPECT_EQ(nikep::prefix_recover(params, 16, 32), 2);
}

TEST(PrefixAttack, InvalidCaptures) {
  const SystemParams params = toy_params();
  EXPECT_EQ(code_of([&] { nikep::prefix_recover(params, 15, 24); }), ErrorCode::MalformedCapture);
  EXPECT_EQ(code_of([&] { nikep::prefix_recover(params, 16, 26); }), ErrorCode::MalformedCapture);
  EXPECT_EQ(code_of([&] { nikep::prefix_recover(params, 0, 24); }), ErrorCode::DegenerateCapture);
}

TEST(KeySizes, PublicIsTwoResidues) {
  EXPECT_EQ(nikep::key_sizes_for_modulus_bits(1024).public_bytes, 256u);
  EXPECT_EQ(nikep::key_sizes_for_modulus_bits(2048).public_bytes, 512u);
  EXPECT_EQ(nikep::key_sizes_for_modulus_bits(1023).public_bytes, 256u);
  EXPECT_EQ(nikep::key_sizes_for_modulus_bits(1024).private_bytes, 288u);
  EXPECT_EQ(nikep::key_sizes(toy_params()).public_bytes, 2u);
}

}  // namespace
}  // namespace onionkep
