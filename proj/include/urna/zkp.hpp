#pragma once

#include <algorithm>

#include <gmpxx.h>

#include "urna/errors.hpp"
#include "urna/mathcore.hpp"
#include "urna/paillier.hpp"
#include "urna/rng.hpp"

// Non-interactive proof of plaintext knowledge for a Paillier ciphertext.
// A valid proof convinces the verifier that whoever produced c = g^m x^n
// knew (m, x) — so a ciphertext that was scaled or substituted in transit
// no longer matches its proof and is rejected without being decrypted.
namespace urna::zkp {

struct Proof {
    mpz_class u;  // commitment g^r s^n mod n^2
    Challenge e;  // 48-bit challenge derived from u alone
    mpz_class v;  // response r - e*m, a plain integer (not reduced mod n)
    mpz_class w;  // response s * x^-e mod n
    friend bool operator==(const Proof&, const Proof&) = default;
};

// Largest message width (in bits) the prover accepts. The response
// v = r - e*m must stay positive for uniformly drawn r < n, so the message
// must leave room for the 48 challenge bits plus 23 bits of slack; messages
// are additionally capped at 3001 bits (one sub-vector plus its choice bit).
inline unsigned message_bit_bound(const paillier::PublicKey& pk) {
    const unsigned cap = 3001;
    if (pk.bits <= 71) return 0;
    return std::min(cap, pk.bits - 71);
}

// One unguarded pass of the prover equations, useful for tracing a proof by
// hand (v may come out negative here). prove() is the safe entry point.
inline Proof prove_steps(const paillier::PublicKey& pk, const mpz_class& m,
                         const paillier::Randomizer& x, const mpz_class& r, const mpz_class& s) {
    Proof proof;
    proof.u = (1 + r * pk.n) % pk.n2 * mod_exp(s, pk.n, pk.n2) % pk.n2;
    proof.e = challenge_hash(proof.u);
    proof.v = r - mpz_class(proof.e) * m;
    proof.w = s * mod_exp(mod_inv(x.x, pk.n), proof.e, pk.n) % pk.n;
    return proof;
}

inline Proof prove(const paillier::PublicKey& pk, const mpz_class& m,
                   const paillier::Randomizer& x, RandomSource& rng) {
    if (sgn(m) < 0) throw MessageTooLong("message must be non-negative");
    const unsigned bound = message_bit_bound(pk);
    if (sgn(m) > 0 && mpz_sizeinbase(m.get_mpz_t(), 2) > bound) {
        throw MessageTooLong("message exceeds the provable width for this key");
    }
    // Redraw (r, s) together until v = r - e*m lands strictly inside (0, n).
    while (true) {
        const mpz_class r = rng.below(pk.n);
        const mpz_class s = rng.unit(pk.n);
        const Proof proof = prove_steps(pk, m, x, r, s);
        if (sgn(proof.v) > 0) return proof;
    }
}

inline bool verify(const paillier::PublicKey& pk, const paillier::Ciphertext& c,
                   const Proof& proof) {
    // Malformed fields fail closed instead of throwing: a verifier faces
    // attacker-controlled bytes.
    if (proof.e >= kChallengeModulus) return false;
    if (sgn(proof.u) <= 0 || proof.u >= pk.n2) return false;
    if (sgn(proof.v) <= 0 || proof.v >= pk.n) return false;
    if (sgn(proof.w) <= 0 || proof.w >= pk.n) return false;
    if (sgn(c.value) <= 0 || c.value >= pk.n2) return false;
    if (gcd(proof.u, pk.n) != 1 || gcd(proof.w, pk.n) != 1 || gcd(c.value, pk.n) != 1) return false;
    // The challenge must be the one this commitment generates; a proof
    // cannot smuggle in a challenge chosen after the fact.
    if (challenge_hash(proof.u) != proof.e) return false;
    const mpz_class rebuilt = (1 + proof.v * pk.n) % pk.n2
                            * mod_exp(c.value, proof.e, pk.n2) % pk.n2
                            * mod_exp(proof.w, pk.n, pk.n2) % pk.n2;
    return rebuilt == proof.u;
}

}  // namespace urna::zkp
