#pragma once

#include <cstdint>
#include <mutex>
#include <random>

#include <gmpxx.h>
#include <sys/random.h>

#include "urna/bytes.hpp"
#include "urna/errors.hpp"

namespace urna {

// Byte-level randomness source. Every distribution the library needs is
// derived from fill() so a seeded source reproduces entire elections.
// Implementations must tolerate concurrent fill() calls.
class RandomSource {
  public:
    virtual ~RandomSource() = default;
    virtual void fill(std::uint8_t* out, std::size_t len) = 0;

    std::uint64_t u64() {
        std::uint8_t buf[8];
        fill(buf, sizeof buf);
        std::uint64_t v = 0;
        for (std::uint8_t b : buf) v = (v << 8) | b;
        return v;
    }

    // Uniform in [0, 2^bit_count).
    mpz_class bits(unsigned bit_count) {
        if (bit_count == 0) return 0;
        Bytes buf((bit_count + 7) / 8);
        fill(buf.data(), buf.size());
        const unsigned excess = static_cast<unsigned>(buf.size() * 8) - bit_count;
        buf[0] &= static_cast<std::uint8_t>(0xff >> excess);
        return be_to_mpz(buf);
    }

    // Uniform in [0, bound) by rejection sampling.
    mpz_class below(const mpz_class& bound) {
        if (sgn(bound) <= 0) throw Error("below: bound must be positive");
        const auto width = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
        while (true) {
            mpz_class candidate = bits(width);
            if (candidate < bound) return candidate;
        }
    }

    // Uniform over the units of Z_modulus: nonzero and coprime to modulus.
    mpz_class unit(const mpz_class& modulus) {
        if (modulus <= 1) throw Error("unit: modulus must exceed 1");
        mpz_class g;
        while (true) {
            mpz_class candidate = below(modulus);
            if (sgn(candidate) == 0) continue;
            mpz_gcd(g.get_mpz_t(), candidate.get_mpz_t(), modulus.get_mpz_t());
            if (g == 1) return candidate;
        }
    }
};

// Operating-system entropy via getrandom(2); safe for concurrent use.
class SystemRandom final : public RandomSource {
  public:
    void fill(std::uint8_t* out, std::size_t len) override {
        while (len > 0) {
            const ssize_t got = getrandom(out, len, 0);
            if (got < 0) {
                if (errno == EINTR) continue;
                throw Error("getrandom failed");
            }
            out += got;
            len -= static_cast<std::size_t>(got);
        }
    }
};

// Deterministic source for simulations and tests. A mutex keeps concurrent
// draws well-defined (though their interleaving still depends on schedule).
class SeededRandom final : public RandomSource {
  public:
    explicit SeededRandom(std::uint64_t seed) : gen_(seed) {}

    void fill(std::uint8_t* out, std::size_t len) override {
        std::lock_guard<std::mutex> lock(mu_);
        for (std::size_t i = 0; i < len; ++i) {
            out[i] = static_cast<std::uint8_t>(gen_());
        }
    }

  private:
    std::mutex mu_;
    std::mt19937_64 gen_;
};

inline RandomSource& system_rng() {
    static SystemRandom rng;
    return rng;
}

}  // namespace urna
