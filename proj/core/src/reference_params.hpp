#pragma once

// Safe primes with 2 as a primitive root, found by gen_prime_with_two_primitive
// (seeds 1024 and 2048). With p = q = 2 they give n of 1024 and 2048 bits.

namespace onionkep::nikep::detail {

inline constexpr const char* kReferenceR1022 =
    "27c4b03a0d48480fd011783a9393643ba8ccb0b7671a20a8cbf082567e2110d4"
    "6efa2d77816ef659bc7dd39c88d2381d279190e3f15cedcd96fd2662410efa8d"
    "b620ba24ee77810eae4145464b964ee40822b91854e8206dec1123ea5d70b82e"
    "7f3a6c6425d284965e1fe1e7df8e9bdbe25709bd36b5ba243399d390f8c446c3";

inline constexpr const char* kReferenceR2046 =
    "22cf5378385a2c2bd0991fd31a9e8d7b4d946bfcae8e5c7a36ec8d9bc9635bb9"
    "a0f058551e4868fa46bce8474616bcd33bb6b04751bb79c8a7881aedec206a5a"
    "35288007a77877b0e1ddb09e249e26e38e34c0474410b1fa00f3c90876f08182"
    "d2ec071f4479995ef6e61ef113e826d928143b39fe29800f839cd765d0e131fc"
    "d1fc8f9d7585024122068d17b7d23491be7997e640c08702f04ac47e31caa07a"
    "44c162dd8430484a362263acbe8bd94c0471a9839049cc0b2a5250f0be1a064f"
    "5863fd70233494b12eb07f6d8e73b8d864cedcd263271fe2ca92819637f7114e"
    "ce5ffcd519cb97d59b42ed6f779ed52e3e43b5e984a859041ca292053dd009ab";

}  // namespace onionkep::nikep::detail
