#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include <gmpxx.h>

#include "urna/errors.hpp"
#include "urna/mathcore.hpp"
#include "urna/rng.hpp"

// Threshold splitting of the decryption secrets. Both secrets ride one
// polynomial over a prime field chosen larger than the Paillier modulus:
// the constant coefficient holds lambda, the linear coefficient holds mu,
// so any t shards recover both and t-1 reveal nothing.
namespace urna::shamir {

struct Params {
    unsigned shard_count = 0;  // how many trustees get a shard
    unsigned threshold = 0;    // how many must convene to reconstruct
    mpz_class prime;
};

struct Shard {
    mpz_class x;
    mpz_class y;
    friend bool operator==(const Shard&, const Shard&) = default;
};

struct SecretPair {
    mpz_class lambda;
    mpz_class mu;
    friend bool operator==(const SecretPair&, const SecretPair&) = default;
};

namespace detail {

inline void validate_params(const Params& params) {
    if (params.threshold < 2) throw InvalidThreshold("threshold must be at least 2");
    if (params.threshold > params.shard_count) {
        throw InvalidThreshold("threshold exceeds shard count");
    }
    if (!is_probable_prime(params.prime)) throw Error("field modulus is not prime");
}

inline mpz_class eval_poly(const std::vector<mpz_class>& coeffs, const mpz_class& x,
                           const mpz_class& prime) {
    mpz_class acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        acc = (acc * x + *it) % prime;
    }
    return acc;
}

}  // namespace detail

// Split with caller-chosen randomness: high_coeffs supplies the t-2
// coefficients above mu, xs the evaluation points. split() draws both.
inline std::vector<Shard> split_with(const SecretPair& secret, const Params& params,
                                     const std::vector<mpz_class>& high_coeffs,
                                     const std::vector<mpz_class>& xs) {
    detail::validate_params(params);
    if (secret.lambda >= params.prime || secret.mu >= params.prime) {
        throw Error("secret exceeds the field");
    }
    if (high_coeffs.size() != params.threshold - 2) throw Error("wrong coefficient count");
    if (xs.size() != params.shard_count) throw Error("wrong evaluation point count");

    std::vector<mpz_class> coeffs{secret.lambda, secret.mu};
    coeffs.insert(coeffs.end(), high_coeffs.begin(), high_coeffs.end());

    std::set<mpz_class> seen;
    std::vector<Shard> shards;
    shards.reserve(xs.size());
    for (const mpz_class& x : xs) {
        if (sgn(x) <= 0 || x >= params.prime) throw Error("evaluation point outside the field");
        if (!seen.insert(x).second) throw DuplicateAbscissa("repeated evaluation point");
        shards.push_back(Shard{x, detail::eval_poly(coeffs, x, params.prime)});
    }
    return shards;
}

inline std::vector<Shard> split(const SecretPair& secret, const Params& params,
                                RandomSource& rng) {
    detail::validate_params(params);
    std::vector<mpz_class> high_coeffs;
    for (unsigned i = 2; i < params.threshold; ++i) high_coeffs.push_back(rng.below(params.prime));
    std::set<mpz_class> seen;
    std::vector<mpz_class> xs;
    while (xs.size() < params.shard_count) {
        mpz_class x = rng.below(params.prime - 1) + 1;
        if (seen.insert(x).second) xs.push_back(x);
    }
    return split_with(secret, params, high_coeffs, xs);
}

// Lagrange interpolation expanded to coefficient form. Exactly threshold
// shards are consumed (the first t of what is offered); extra shards are
// legal and ignored.
inline std::vector<mpz_class> interpolate_coefficients(std::vector<Shard> shards,
                                                       const Params& params) {
    detail::validate_params(params);
    if (shards.size() < params.threshold) {
        throw InsufficientShards("need at least threshold shards");
    }
    shards.resize(params.threshold);
    const mpz_class& prime = params.prime;

    std::set<mpz_class> seen;
    for (const Shard& s : shards) {
        if (sgn(s.x) <= 0 || s.x >= prime || sgn(s.y) < 0 || s.y >= prime) {
            throw Error("shard outside the field");
        }
        if (!seen.insert(s.x).second) throw DuplicateAbscissa("two shards share an abscissa");
    }

    const auto mod_sub = [&prime](const mpz_class& a, const mpz_class& b) -> mpz_class {
        return ((a - b) % prime + prime) % prime;
    };

    const std::size_t t = shards.size();
    std::vector<mpz_class> result(t, 0);
    std::vector<mpz_class> basis;
    for (std::size_t i = 0; i < t; ++i) {
        // Numerator polynomial prod_{j != i} (x - x_j), built up one linear
        // factor at a time; denominator prod_{j != i} (x_i - x_j).
        basis.assign(1, 1);
        mpz_class denom = 1;
        for (std::size_t j = 0; j < t; ++j) {
            if (j == i) continue;
            basis.push_back(0);
            for (std::size_t k = basis.size() - 1; k > 0; --k) {
                basis[k] = mod_sub(basis[k - 1], basis[k] * shards[j].x);
            }
            basis[0] = mod_sub(0, basis[0] * shards[j].x);
            denom = denom * mod_sub(shards[i].x, shards[j].x) % prime;
        }
        const mpz_class scale = shards[i].y * mod_inv(denom, prime) % prime;
        for (std::size_t k = 0; k < basis.size(); ++k) {
            result[k] = (result[k] + basis[k] * scale) % prime;
        }
    }
    return result;
}

inline SecretPair reconstruct(const std::vector<Shard>& shards, const Params& params) {
    const std::vector<mpz_class> coeffs = interpolate_coefficients(shards, params);
    return SecretPair{coeffs[0], coeffs[1]};
}

// Direct evaluation of the interpolating polynomial at zero — an
// independent route to the constant coefficient, used as a cross-check.
inline mpz_class interpolate_at_zero(std::vector<Shard> shards, const Params& params) {
    detail::validate_params(params);
    if (shards.size() < params.threshold) {
        throw InsufficientShards("need at least threshold shards");
    }
    shards.resize(params.threshold);
    const mpz_class& prime = params.prime;
    mpz_class acc = 0;
    for (std::size_t i = 0; i < shards.size(); ++i) {
        mpz_class num = 1, denom = 1;
        for (std::size_t j = 0; j < shards.size(); ++j) {
            if (j == i) continue;
            num = num * shards[j].x % prime;
            denom = denom * ((shards[j].x - shards[i].x + prime) % prime) % prime;
        }
        acc = (acc + shards[i].y * num % prime * mod_inv(denom, prime)) % prime;
    }
    return acc;
}

}  // namespace urna::shamir
