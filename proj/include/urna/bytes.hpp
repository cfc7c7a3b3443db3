#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <openssl/evp.h>

#include "urna/errors.hpp"

namespace urna {

using Bytes = std::vector<std::uint8_t>;

// Minimal big-endian byte string of a non-negative integer. Zero encodes as
// the single byte 0x00 so every value has a non-empty, canonical encoding.
inline Bytes bytes_be(const mpz_class& value) {
    if (sgn(value) < 0) throw Error("bytes_be: negative value");
    if (sgn(value) == 0) return Bytes{0x00};
    size_t count = 0;
    Bytes out((mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8);
    mpz_export(out.data(), &count, 1, 1, 1, 0, value.get_mpz_t());
    out.resize(count);
    return out;
}

inline mpz_class be_to_mpz(const std::uint8_t* data, std::size_t len) {
    mpz_class out;
    if (len > 0) mpz_import(out.get_mpz_t(), len, 1, 1, 1, 0, data);
    return out;
}

inline mpz_class be_to_mpz(const Bytes& bytes) {
    return be_to_mpz(bytes.data(), bytes.size());
}

inline Bytes u64_be(std::uint64_t v) {
    Bytes out(8);
    for (int i = 7; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
    return out;
}

inline void append(Bytes& dst, const Bytes& src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

inline Bytes concat(const Bytes& a, const Bytes& b) {
    Bytes out = a;
    append(out, b);
    return out;
}

// Lowercase minimal hex (no 0x prefix), the wire format for every big
// integer this library serializes.
inline std::string to_hex(const mpz_class& value) {
    if (sgn(value) < 0) throw Error("to_hex: negative value");
    char* raw = mpz_get_str(nullptr, 16, value.get_mpz_t());
    std::string out(raw);
    void (*freefunc)(void*, size_t) = nullptr;
    mp_get_memory_functions(nullptr, nullptr, &freefunc);
    freefunc(raw, out.size() + 1);
    return out;
}

inline mpz_class from_hex(const std::string& hex) {
    if (hex.empty()) throw Error("from_hex: empty string");
    for (char c : hex) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
        if (!ok) throw Error("from_hex: invalid hex digit");
    }
    mpz_class out;
    if (mpz_set_str(out.get_mpz_t(), hex.c_str(), 16) != 0) throw Error("from_hex: parse failure");
    return out;
}

inline std::string to_hex(const Bytes& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline Bytes hex_to_bytes(const std::string& hex) {
    if (hex.size() % 2 != 0) throw Error("hex_to_bytes: odd length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error("hex_to_bytes: invalid hex digit");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    }
    return out;
}

// Standard-alphabet base64 with '=' padding.
inline std::string base64(const Bytes& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                        bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

inline Bytes sha256(const std::uint8_t* data, std::size_t len) {
    Bytes digest(32);
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, digest.data(), &out_len, EVP_sha256(), nullptr) != 1 || out_len != 32) {
        throw Error("sha256: digest failure");
    }
    return digest;
}

inline Bytes sha256(const Bytes& bytes) { return sha256(bytes.data(), bytes.size()); }

inline Bytes sha256(const std::string& text) {
    return sha256(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

}  // namespace urna
