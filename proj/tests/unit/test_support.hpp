#pragma once

#include <string>
#include <vector>

#include "urna/blindsig.hpp"
#include "urna/bytes.hpp"
#include "urna/election_spec.hpp"
#include "urna/encoding.hpp"
#include "urna/paillier.hpp"
#include "urna/rng.hpp"
#include "urna/tally.hpp"

namespace urna::testsupport {

// Four plain parties at width 5: sub-vector integers stay tiny, so these
// fixtures work under small test keys.
inline encoding::ContestSpec small_contest(const std::string& id = "quad") {
    encoding::ContestSpec spec;
    spec.contest_id = id;
    spec.parties = {"A", "B", "C", "D"};
    return spec;
}

inline std::string fake_anon_id(unsigned serial) {
    return to_hex(sha256(u64_be(serial)));
}

// Counter width for pipeline tests: wide enough that a few hundred ballots
// cannot saturate the count field.
inline constexpr unsigned kTestWidth = 8;

// Two contests over two states: the president race runs everywhere with a
// coalition and both extra options, the senate race only in CMX. Small
// enough for 256-bit test keys.
inline ElectionSpec two_contest_spec() {
    ElectionSpec spec;
    spec.election_id = "mx-test";
    spec.key_bits = 256;
    spec.states = {"CMX", "JAL"};

    ContestConfig president;
    president.contest = small_contest("president");
    president.contest.coalitions = {{1, 2}};
    president.contest.allow_writein = true;
    president.contest.allow_novote = true;
    president.width = kTestWidth;
    president.states = {"*"};

    ContestConfig senate;
    senate.contest = small_contest("senate");
    senate.contest.allow_novote = true;
    senate.width = kTestWidth;
    senate.states = {"CMX"};

    spec.contests = {president, senate};
    spec.validate();
    return spec;
}

// A correctly signed tally message marking `party` in the small contest.
inline tally::Message make_message(const paillier::PublicKey& pk,
                                   const blindsig::Keypair& signer, unsigned serial,
                                   const tally::Key& key, unsigned party, RandomSource& rng) {
    const encoding::Layout layout =
        encoding::build_layout(small_contest(key.contest_id), kTestWidth);
    const encoding::ChoiceVector cv =
        encoding::encode_selection(layout, encoding::Selection::for_parties({party}));

    tally::Message m;
    m.anon_id = fake_anon_id(serial);
    m.key = key;
    for (const mpz_class& value : cv.subvectors) {
        m.subvectors.push_back(paillier::encrypt(pk, value, rng));
    }
    m.writein = paillier::encrypt(pk, 0, rng);
    const mpz_class digest = tally::message_digest(m, signer.vk);
    m.signature = blindsig::Signature{mod_exp(digest, signer.d, signer.vk.n)};
    return m;
}

}  // namespace urna::testsupport
