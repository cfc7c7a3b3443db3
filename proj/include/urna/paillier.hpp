#pragma once

#include <gmpxx.h>

#include "urna/errors.hpp"
#include "urna/mathcore.hpp"
#include "urna/rng.hpp"

// Additively homomorphic encryption over Z_n: multiplying ciphertexts adds
// their plaintexts, which is what makes running totals possible without
// decrypting individual ballots. The generator is fixed to g = n + 1, so
// g^m mod n^2 collapses to 1 + m*n.
namespace urna::paillier {

struct PublicKey {
    mpz_class n;
    mpz_class g;   // always n + 1
    mpz_class n2;  // n^2, cached because every operation reduces by it
    unsigned bits = 0;
};

struct PrivateKey {
    mpz_class p;
    mpz_class q;
    mpz_class lambda;  // lcm(p-1, q-1)
    mpz_class mu;      // (L(g^lambda mod n^2))^-1 mod n
};

struct Keypair {
    PublicKey pub;
    PrivateKey priv;
};

// Encryption randomizer, a unit of Z_n. Held separately from the ciphertext
// because the ballot proof needs it as the witness.
struct Randomizer {
    mpz_class x;
};

struct Ciphertext {
    mpz_class value;
    friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

// L(u) = (u - 1) / n, defined only when u is 1 mod n.
inline mpz_class residue_log(const mpz_class& u, const mpz_class& n) {
    const mpz_class shifted = u - 1;
    if (shifted % n != 0) throw InvalidCiphertext("decryption left the 1 + kn coset");
    return shifted / n;
}

inline Keypair from_primes(const mpz_class& p, const mpz_class& q) {
    if (!is_probable_prime(p) || !is_probable_prime(q)) throw Error("keypair: factor not prime");
    if (p == q) throw Error("keypair: factors must differ");
    Keypair kp;
    kp.pub.n = p * q;
    kp.pub.g = kp.pub.n + 1;
    kp.pub.n2 = kp.pub.n * kp.pub.n;
    kp.pub.bits = static_cast<unsigned>(mpz_sizeinbase(kp.pub.n.get_mpz_t(), 2));
    kp.priv.p = p;
    kp.priv.q = q;
    kp.priv.lambda = lcm(p - 1, q - 1);
    const mpz_class folded = residue_log(mod_exp(kp.pub.g, kp.priv.lambda, kp.pub.n2), kp.pub.n);
    kp.priv.mu = mod_inv(folded, kp.pub.n);
    return kp;
}

// Fresh keypair whose modulus is exactly `bits` long. Both prime candidates
// carry two forced top bits, so no retry loop on the product width is needed.
inline Keypair keygen(unsigned bits, RandomSource& rng) {
    if (bits < 16 || bits % 2 != 0) throw Error("keygen: bits must be even and at least 16");
    while (true) {
        const mpz_class p = gen_prime(bits / 2, rng, 2);
        const mpz_class q = gen_prime(bits / 2, rng, 2);
        if (p == q) continue;
        Keypair kp = from_primes(p, q);
        if (!has_no_small_factor(kp.pub.n)) continue;
        return kp;
    }
}

inline Randomizer draw_randomizer(const PublicKey& pk, RandomSource& rng) {
    return Randomizer{rng.unit(pk.n)};
}

inline Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, const Randomizer& x) {
    if (sgn(m) < 0 || m >= pk.n) throw MessageTooLarge("plaintext outside [0, n)");
    const mpz_class g_to_m = (1 + m * pk.n) % pk.n2;
    return Ciphertext{g_to_m * mod_exp(x.x, pk.n, pk.n2) % pk.n2};
}

inline Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, RandomSource& rng) {
    return encrypt(pk, m, draw_randomizer(pk, rng));
}

// Everything decryption needs; constructible either from a full keypair or
// from a reconstructed (lambda, mu) pair plus the public key.
struct Decryptor {
    mpz_class n;
    mpz_class n2;
    mpz_class lambda;
    mpz_class mu;

    Decryptor(const PublicKey& pk, const mpz_class& lambda_in, const mpz_class& mu_in)
        : n(pk.n), n2(pk.n2), lambda(lambda_in), mu(mu_in) {}
    explicit Decryptor(const Keypair& kp)
        : Decryptor(kp.pub, kp.priv.lambda, kp.priv.mu) {}
};

inline mpz_class decrypt(const Decryptor& dec, const Ciphertext& c) {
    if (sgn(c.value) <= 0 || c.value >= dec.n2) throw InvalidCiphertext("ciphertext outside (0, n^2)");
    if (gcd(c.value, dec.n) != 1) throw InvalidCiphertext("ciphertext shares a factor with n");
    const mpz_class folded = residue_log(mod_exp(c.value, dec.lambda, dec.n2), dec.n);
    return folded * dec.mu % dec.n;
}

// Ciphertext product: plaintext sum mod n.
inline Ciphertext hom_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
    return Ciphertext{a.value * b.value % pk.n2};
}

// Ciphertext power: plaintext scaled by k mod n. Negative k goes through the
// modular inverse; this is also the tampering primitive the proofs defeat.
inline Ciphertext hom_scale(const PublicKey& pk, const Ciphertext& c, const mpz_class& k) {
    if (sgn(k) >= 0) return Ciphertext{mod_exp(c.value, k, pk.n2)};
    return Ciphertext{mod_exp(mod_inv(c.value, pk.n2), -k, pk.n2)};
}

}  // namespace urna::paillier
