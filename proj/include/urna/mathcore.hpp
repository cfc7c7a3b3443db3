#pragma once

#include <cstdint>

#include <gmpxx.h>

#include "urna/bytes.hpp"
#include "urna/errors.hpp"
#include "urna/rng.hpp"

namespace urna {

inline constexpr int kMillerRabinRounds = 64;
inline constexpr unsigned kChallengeBits = 48;
inline constexpr std::uint64_t kChallengeModulus = std::uint64_t{1} << kChallengeBits;

// Proof challenges are 48-bit values; they always fit a machine word.
using Challenge = std::uint64_t;

inline mpz_class mod_exp(const mpz_class& base, const mpz_class& exp, const mpz_class& modulus) {
    if (modulus < 2) throw Error("mod_exp: modulus must exceed 1");
    if (sgn(exp) < 0) throw Error("mod_exp: negative exponent");
    mpz_class out;
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), modulus.get_mpz_t());
    return out;
}

inline mpz_class mod_inv(const mpz_class& value, const mpz_class& modulus) {
    if (modulus < 2) throw Error("mod_inv: modulus must exceed 1");
    mpz_class out;
    if (mpz_invert(out.get_mpz_t(), value.get_mpz_t(), modulus.get_mpz_t()) == 0) {
        throw NotCoprime("mod_inv: value shares a factor with the modulus");
    }
    return out;
}

inline mpz_class lcm(const mpz_class& a, const mpz_class& b) {
    mpz_class out;
    mpz_lcm(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return out;
}

inline mpz_class gcd(const mpz_class& a, const mpz_class& b) {
    mpz_class out;
    mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return out;
}

inline bool is_probable_prime(const mpz_class& n, int rounds = kMillerRabinRounds) {
    return mpz_probab_prime_p(n.get_mpz_t(), rounds) > 0;
}

// Random probable prime of exactly bit_count bits. top_bits high bits are
// forced to 1: with top_bits = 2 the product of two such primes always has
// exactly twice their bit length, which keygen relies on.
inline mpz_class gen_prime(unsigned bit_count, RandomSource& rng, unsigned top_bits = 1) {
    if (bit_count < 8 || top_bits == 0 || top_bits >= bit_count) {
        throw Error("gen_prime: unsupported bit count");
    }
    while (true) {
        mpz_class candidate = rng.bits(bit_count);
        for (unsigned i = 0; i < top_bits; ++i) {
            mpz_setbit(candidate.get_mpz_t(), bit_count - 1 - i);
        }
        mpz_setbit(candidate.get_mpz_t(), 0);
        if (is_probable_prime(candidate)) return candidate;
    }
}

// Smallest prime strictly greater than n.
inline mpz_class next_prime_above(const mpz_class& n) {
    mpz_class out;
    mpz_nextprime(out.get_mpz_t(), n.get_mpz_t());
    return out;
}

// True when n has no prime factor below the bound; a cheap sanity screen for
// freshly generated moduli, not a primality proof.
inline bool has_no_small_factor(const mpz_class& n, unsigned long bound = 1000) {
    if (n < 2) return false;
    for (unsigned long p = 2; p < bound; ++p) {
        if (mpz_divisible_ui_p(n.get_mpz_t(), p) != 0 && n != p) return false;
    }
    return true;
}

// Fiat–Shamir challenge of a commitment. The pipeline is pinned for wire
// compatibility: commitment bytes (minimal big-endian, zero encodes as one
// 0x00 byte) -> base64 text -> SHA-256 of that text -> base64 of the digest
// -> that string's ASCII bytes read as a big-endian integer -> mod 2^48.
inline Challenge challenge_hash(const mpz_class& commitment) {
    const std::string outer = base64(sha256(base64(bytes_be(commitment))));
    const mpz_class value = be_to_mpz(reinterpret_cast<const std::uint8_t*>(outer.data()), outer.size());
    mpz_class reduced = value % mpz_class(kChallengeModulus);
    return static_cast<Challenge>(reduced.get_ui());
}

// SHA-256 over the concatenation of two byte strings, read big-endian and
// reduced into the target group. Used to bind ballot ciphertext pairs to one
// signable residue.
inline mpz_class digest_concat(const Bytes& first, const Bytes& second, const mpz_class& modulus) {
    if (modulus < 2) throw Error("digest_concat: modulus must exceed 1");
    return be_to_mpz(sha256(concat(first, second))) % modulus;
}

}  // namespace urna
