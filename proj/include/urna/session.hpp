#pragma once

#include <memory>
#include <optional>

#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>

#include "urna/bytes.hpp"
#include "urna/errors.hpp"
#include "urna/rng.hpp"

// Voter-to-backend transport: an ephemeral ECDH handshake seeds a hash
// ratchet, and every frame in either direction is sealed under the current
// ratchet key. Keys never repeat, so a recorded frame cannot be replayed
// into a live session.
namespace urna::election {

namespace detail {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct ParamBldDeleter {
    void operator()(OSSL_PARAM_BLD* p) const { OSSL_PARAM_BLD_free(p); }
};
struct ParamDeleter {
    void operator()(OSSL_PARAM* p) const { OSSL_PARAM_free(p); }
};
struct BnDeleter {
    void operator()(BIGNUM* p) const { BN_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

inline PkeyPtr import_public_point(const Bytes& point) {
    std::unique_ptr<OSSL_PARAM_BLD, ParamBldDeleter> bld(OSSL_PARAM_BLD_new());
    if (!bld || OSSL_PARAM_BLD_push_utf8_string(bld.get(), OSSL_PKEY_PARAM_GROUP_NAME, "P-256",
                                                0) != 1 ||
        OSSL_PARAM_BLD_push_octet_string(bld.get(), OSSL_PKEY_PARAM_PUB_KEY, point.data(),
                                         point.size()) != 1) {
        throw Error("handshake: cannot stage peer point");
    }
    std::unique_ptr<OSSL_PARAM, ParamDeleter> params(OSSL_PARAM_BLD_to_param(bld.get()));
    std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(
        EVP_PKEY_CTX_new_from_name(nullptr, "EC", nullptr));
    EVP_PKEY* raw = nullptr;
    if (!params || !ctx || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
        EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params.get()) != 1) {
        throw Error("handshake: peer point rejected");
    }
    return PkeyPtr(raw);
}

}  // namespace detail

// Ephemeral P-256 keypair for one handshake.
class EcdhKeypair {
  public:
    EcdhKeypair() : key_(EVP_PKEY_Q_keygen(nullptr, nullptr, "EC", "P-256")) {
        if (!key_) throw Error("handshake: keygen failed");
    }

    // Uncompressed SEC1 point: 0x04 followed by the 32-byte x and y
    // coordinates.
    Bytes public_point() const {
        BIGNUM* x_raw = nullptr;
        BIGNUM* y_raw = nullptr;
        if (EVP_PKEY_get_bn_param(key_.get(), OSSL_PKEY_PARAM_EC_PUB_X, &x_raw) != 1 ||
            EVP_PKEY_get_bn_param(key_.get(), OSSL_PKEY_PARAM_EC_PUB_Y, &y_raw) != 1) {
            BN_free(x_raw);
            throw Error("handshake: cannot export public point");
        }
        const std::unique_ptr<BIGNUM, detail::BnDeleter> x(x_raw);
        const std::unique_ptr<BIGNUM, detail::BnDeleter> y(y_raw);
        Bytes out(65);
        out[0] = 0x04;
        if (BN_bn2binpad(x.get(), out.data() + 1, 32) != 32 ||
            BN_bn2binpad(y.get(), out.data() + 33, 32) != 32) {
            throw Error("handshake: cannot serialize public point");
        }
        return out;
    }

    // The shared secret's x-coordinate, 32 bytes for P-256.
    Bytes derive_shared_x(const Bytes& peer_point) const {
        const detail::PkeyPtr peer = detail::import_public_point(peer_point);
        std::unique_ptr<EVP_PKEY_CTX, detail::PkeyCtxDeleter> ctx(
            EVP_PKEY_CTX_new(key_.get(), nullptr));
        std::size_t len = 0;
        if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
            EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
            EVP_PKEY_derive(ctx.get(), nullptr, &len) != 1) {
            throw Error("handshake: derive failed");
        }
        Bytes secret(len);
        if (EVP_PKEY_derive(ctx.get(), secret.data(), &len) != 1) {
            throw Error("handshake: derive failed");
        }
        secret.resize(len);
        return secret;
    }

  private:
    detail::PkeyPtr key_;
};

// Per-session key schedule. Both ends advance once per frame, in lockstep:
// the state hashes forward and the counter binds each key to its position.
struct Session {
    Bytes state;  // 32 bytes
    std::uint64_t counter = 0;

    static Session from_shared_x(const Bytes& shared_x) {
        return Session{sha256(shared_x), 0};
    }

    Bytes current_key() const { return sha256(concat(state, u64_be(counter))); }

    void advance() {
        state = sha256(state);
        counter += 1;
    }
};

inline constexpr std::size_t kSealIvBytes = 12;
inline constexpr std::size_t kSealTagBytes = 16;

// AES-256-GCM, frame = iv || ciphertext || tag.
inline Bytes seal(const Bytes& key, const Bytes& plaintext, RandomSource& rng) {
    if (key.size() != 32) throw Error("seal: key must be 32 bytes");
    Bytes iv(kSealIvBytes);
    rng.fill(iv.data(), iv.size());

    std::unique_ptr<EVP_CIPHER_CTX, detail::CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                   iv.data()) != 1) {
        throw Error("seal: init failed");
    }
    Bytes out(plaintext.size());
    int out_len = 0;
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data(), &out_len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
        throw Error("seal: encrypt failed");
    }
    int final_len = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + out_len, &final_len) != 1) {
        throw Error("seal: finalize failed");
    }
    Bytes tag(kSealTagBytes);
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(tag.size()),
                            tag.data()) != 1) {
        throw Error("seal: tag failed");
    }
    Bytes frame = iv;
    append(frame, out);
    append(frame, tag);
    return frame;
}

// Authenticated open; any bit flip, wrong key, or replayed frame under an
// advanced ratchet returns nothing.
inline std::optional<Bytes> open(const Bytes& key, const Bytes& frame) {
    if (key.size() != 32 || frame.size() < kSealIvBytes + kSealTagBytes) return std::nullopt;
    const std::size_t body_len = frame.size() - kSealIvBytes - kSealTagBytes;

    std::unique_ptr<EVP_CIPHER_CTX, detail::CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                                   frame.data()) != 1) {
        return std::nullopt;
    }
    Bytes out(body_len);
    int out_len = 0;
    if (body_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &out_len, frame.data() + kSealIvBytes,
                          static_cast<int>(body_len)) != 1) {
        return std::nullopt;
    }
    Bytes tag(frame.end() - kSealTagBytes, frame.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(tag.size()),
                            tag.data()) != 1) {
        return std::nullopt;
    }
    int final_len = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + out_len, &final_len) != 1) {
        return std::nullopt;
    }
    return out;
}

// One end of a sealed conversation: sealing or successfully opening a frame
// advances the ratchet; a failed open leaves it untouched.
struct Channel {
    Session session;

    Bytes seal_frame(const Bytes& plaintext, RandomSource& rng) {
        Bytes frame = seal(session.current_key(), plaintext, rng);
        session.advance();
        return frame;
    }

    std::optional<Bytes> open_frame(const Bytes& frame) {
        std::optional<Bytes> plaintext = open(session.current_key(), frame);
        if (plaintext) session.advance();
        return plaintext;
    }
};

}  // namespace urna::election
