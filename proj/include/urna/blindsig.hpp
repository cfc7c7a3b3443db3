#pragma once

#include <gmpxx.h>

#include "urna/errors.hpp"
#include "urna/mathcore.hpp"
#include "urna/rng.hpp"

// RSA blind signatures: the backend signs a masked ballot digest, so the
// signature it returns is valid for the real digest yet the backend never
// learns which digest it signed. Unblinding the signature severs the link
// between the signing session and the ballot that later arrives for tally.
namespace urna::blindsig {

struct VerifyKey {
    mpz_class n;
    mpz_class e;
};

struct Keypair {
    VerifyKey vk;
    mpz_class d;
};

struct Mask {
    mpz_class r;
};

struct Signature {
    mpz_class s;
    friend bool operator==(const Signature&, const Signature&) = default;
};

struct Blinded {
    mpz_class value;
    Mask mask;
};

inline Keypair from_primes(const mpz_class& p, const mpz_class& q, const mpz_class& e) {
    if (!is_probable_prime(p) || !is_probable_prime(q)) throw Error("signing key: factor not prime");
    if (p == q) throw Error("signing key: factors must differ");
    const mpz_class phi = (p - 1) * (q - 1);
    if (gcd(e, phi) != 1) throw Error("signing key: exponent shares a factor with phi");
    Keypair kp;
    kp.vk.n = p * q;
    kp.vk.e = e;
    kp.d = mod_inv(e, phi);
    return kp;
}

inline Keypair keygen(unsigned bits, RandomSource& rng, const mpz_class& e = 65537) {
    if (bits < 16 || bits % 2 != 0) throw Error("signing keygen: bits must be even and at least 16");
    while (true) {
        const mpz_class p = gen_prime(bits / 2, rng, 2);
        const mpz_class q = gen_prime(bits / 2, rng, 2);
        if (p == q) continue;
        const mpz_class phi = (p - 1) * (q - 1);
        if (gcd(e, phi) != 1) continue;
        return from_primes(p, q, e);
    }
}

// Deterministic masking for fixed-nonce fixtures; callers normally use
// blind(), which draws the mask.
inline mpz_class blind_with(const VerifyKey& vk, const mpz_class& digest, const Mask& mask) {
    if (sgn(digest) < 0 || digest >= vk.n) throw Error("blind: digest outside [0, n)");
    if (gcd(mask.r, vk.n) != 1) throw NotCoprime("blind: mask not a unit");
    return digest * mod_exp(mask.r, vk.e, vk.n) % vk.n;
}

inline Blinded blind(const VerifyKey& vk, const mpz_class& digest, RandomSource& rng) {
    const Mask mask{rng.unit(vk.n)};
    return Blinded{blind_with(vk, digest, mask), mask};
}

// The signer sees only the masked value; this is an ordinary RSA signature
// on whatever was handed over.
inline mpz_class sign_blinded(const Keypair& kp, const mpz_class& blinded) {
    if (sgn(blinded) < 0 || blinded >= kp.vk.n) throw Error("sign: value outside [0, n)");
    return mod_exp(blinded, kp.d, kp.vk.n);
}

inline Signature unblind(const mpz_class& blind_signature, const Mask& mask, const VerifyKey& vk) {
    return Signature{mod_inv(mask.r, vk.n) * blind_signature % vk.n};
}

inline bool verify(const VerifyKey& vk, const mpz_class& digest, const Signature& sig) {
    if (sgn(sig.s) < 0 || sig.s >= vk.n) return false;
    if (sgn(digest) < 0 || digest >= vk.n) return false;
    return mod_exp(sig.s, vk.e, vk.n) == digest;
}

}  // namespace urna::blindsig
