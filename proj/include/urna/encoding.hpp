#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "urna/errors.hpp"
#include "urna/paillier.hpp"
#include "urna/rng.hpp"
#include "urna/zkp.hpp"

// Positional ballot encoding. Every markable option of a contest owns a
// width-bit counter field inside a packed integer; casting a ballot adds 1
// to exactly one field, so summing encrypted ballots sums every counter at
// once. Contests too wide for one integer split into fixed-capacity
// sub-vectors, each carrying its own ballot-count field on top.
namespace urna::encoding {

struct ContestSpec {
    std::string contest_id;
    std::vector<std::string> parties;               // ballot order
    std::vector<std::vector<unsigned>> coalitions;  // party indices, pairwise disjoint
    bool allow_writein = false;
    bool allow_novote = false;
};

struct Component {
    enum class Kind { party, writein, novote, coalition };
    Kind kind = Kind::party;
    unsigned party = 0;          // Kind::party
    unsigned coalition = 0;      // Kind::coalition: index into spec.coalitions
    std::uint64_t slot = 0;      // Kind::coalition: 1 .. 2^k - 3
    friend bool operator==(const Component&, const Component&) = default;
};

// Deterministic slot number of a coalition subset, from the members'
// positions within their coalition: (sum of 2^position) - 2. Slot numbers
// of singleton subsets fall inside the range but are never produced, which
// keeps every subset's slot stable when others go unused.
inline std::uint64_t coalition_slot(std::vector<unsigned> member_positions) {
    if (member_positions.size() < 2) {
        throw SingletonSubset("a coalition mark needs at least two member parties");
    }
    std::sort(member_positions.begin(), member_positions.end());
    std::uint64_t acc = 0;
    unsigned last = 0;
    bool first = true;
    for (unsigned pos : member_positions) {
        if (!first && pos == last) throw Error("repeated coalition member");
        if (pos >= 63) throw Error("coalition position out of range");
        acc += std::uint64_t{1} << pos;
        last = pos;
        first = false;
    }
    return acc - 2;
}

inline void validate_spec(const ContestSpec& spec) {
    if (spec.contest_id.empty()) throw InvalidSpec("contest id is empty");
    for (char c : spec.contest_id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) throw InvalidSpec("contest id must be [A-Za-z0-9_-]+: " + spec.contest_id);
    }
    if (spec.parties.empty()) throw InvalidSpec(spec.contest_id + ": no parties");
    for (const std::string& name : spec.parties) {
        if (name.empty()) throw InvalidSpec(spec.contest_id + ": empty party name");
    }
    std::vector<bool> in_coalition(spec.parties.size(), false);
    for (const auto& coalition : spec.coalitions) {
        if (coalition.size() < 2) throw InvalidSpec(spec.contest_id + ": coalition below two parties");
        if (coalition.size() > 20) throw InvalidSpec(spec.contest_id + ": coalition too large");
        for (unsigned member : coalition) {
            if (member >= spec.parties.size()) {
                throw InvalidSpec(spec.contest_id + ": coalition member out of range");
            }
            if (in_coalition[member]) {
                throw InvalidSpec(spec.contest_id + ": party in two coalitions");
            }
            in_coalition[member] = true;
        }
    }
}

// The realized field map of one contest at a given counter width. Owns a
// copy of the spec so encoding and labeling need nothing else.
struct Layout {
    ContestSpec spec;
    unsigned width = 0;
    std::size_t capacity = 0;  // choice fields per sub-vector
    std::vector<Component> components;

    std::size_t subvector_count() const {
        return (components.size() + capacity - 1) / capacity;
    }

    // Choice fields in sub-vector sv; the last one is usually partial.
    std::size_t choice_count(std::size_t sv) const {
        const std::size_t start = sv * capacity;
        return std::min(capacity, components.size() - start);
    }

    std::string label(std::size_t index) const {
        const Component& comp = components.at(index);
        switch (comp.kind) {
            case Component::Kind::party:
                return spec.parties[comp.party];
            case Component::Kind::writein:
                return "write-in";
            case Component::Kind::novote:
                return "no vote";
            case Component::Kind::coalition: {
                // Invert slot + 2 back into member positions.
                const std::uint64_t mask = comp.slot + 2;
                std::string out;
                for (unsigned pos = 0; pos < 63; ++pos) {
                    if ((mask >> pos) & 1) {
                        if (!out.empty()) out += "+";
                        out += spec.parties[spec.coalitions[comp.coalition][pos]];
                    }
                }
                return out;
            }
        }
        return {};
    }
};

inline Layout build_layout(const ContestSpec& spec, unsigned width = 20) {
    if (width < 2 || width > 32) throw InvalidSpec("counter width must be 2..32 bits");
    validate_spec(spec);
    Layout layout;
    layout.spec = spec;
    layout.width = width;
    layout.capacity = 3000 / width;

    for (unsigned p = 0; p < spec.parties.size(); ++p) {
        layout.components.push_back(Component{Component::Kind::party, p, 0, 0});
    }
    if (spec.allow_writein) {
        layout.components.push_back(Component{Component::Kind::writein, 0, 0, 0});
    }
    if (spec.allow_novote) {
        layout.components.push_back(Component{Component::Kind::novote, 0, 0, 0});
    }
    for (unsigned j = 0; j < spec.coalitions.size(); ++j) {
        const std::uint64_t slots = (std::uint64_t{1} << spec.coalitions[j].size()) - 3;
        for (std::uint64_t slot = 1; slot <= slots; ++slot) {
            layout.components.push_back(Component{Component::Kind::coalition, 0, j, slot});
        }
    }
    return layout;
}

// What one voter marked: exactly one standalone party, a multi-party subset
// of one coalition, a write-in, or an explicit abstention.
struct Selection {
    enum class Kind { parties, writein, novote };
    Kind kind = Kind::novote;
    std::vector<unsigned> parties;  // Kind::parties
    std::string writein_name;       // Kind::writein

    static Selection for_parties(std::vector<unsigned> indices) {
        Selection s;
        s.kind = Kind::parties;
        s.parties = std::move(indices);
        return s;
    }
    static Selection for_writein(std::string name) {
        Selection s;
        s.kind = Kind::writein;
        s.writein_name = std::move(name);
        return s;
    }
    static Selection no_vote() { return Selection{}; }
};

// Global component index a selection maps to; throws InvalidSelection with
// the violated rule spelled out.
inline std::size_t component_index(const Layout& layout, const Selection& selection) {
    const ContestSpec& spec = layout.spec;
    const std::size_t flags_base = spec.parties.size();

    switch (selection.kind) {
        case Selection::Kind::writein:
            if (!spec.allow_writein) {
                throw InvalidSelection(spec.contest_id + ": write-ins not allowed");
            }
            return flags_base;
        case Selection::Kind::novote:
            if (!spec.allow_novote) {
                throw InvalidSelection(spec.contest_id + ": abstention not recorded");
            }
            return flags_base + (spec.allow_writein ? 1 : 0);
        case Selection::Kind::parties:
            break;
    }

    std::vector<unsigned> marked = selection.parties;
    std::sort(marked.begin(), marked.end());
    if (marked.empty()) throw InvalidSelection(spec.contest_id + ": no party marked");
    for (std::size_t i = 0; i < marked.size(); ++i) {
        if (marked[i] >= spec.parties.size()) {
            throw InvalidSelection(spec.contest_id + ": party index out of range");
        }
        if (i > 0 && marked[i] == marked[i - 1]) {
            throw InvalidSelection(spec.contest_id + ": party marked twice");
        }
    }
    if (marked.size() == 1) return marked[0];

    // A multi-party mark is only valid inside a single coalition.
    for (unsigned j = 0; j < spec.coalitions.size(); ++j) {
        const auto& members = spec.coalitions[j];
        std::vector<unsigned> positions;
        for (unsigned party : marked) {
            for (unsigned pos = 0; pos < members.size(); ++pos) {
                if (members[pos] == party) {
                    positions.push_back(pos);
                    break;
                }
            }
        }
        if (positions.size() != marked.size()) continue;

        std::size_t base = spec.parties.size() + (spec.allow_writein ? 1 : 0) +
                           (spec.allow_novote ? 1 : 0);
        for (unsigned l = 0; l < j; ++l) {
            base += (std::size_t{1} << spec.coalitions[l].size()) - 3;
        }
        return base + static_cast<std::size_t>(coalition_slot(positions)) - 1;
    }
    throw InvalidSelection(spec.contest_id + ": marked parties span no single coalition");
}

inline std::optional<std::string> validate_selection(const Layout& layout,
                                                     const Selection& selection) {
    try {
        component_index(layout, selection);
        return std::nullopt;
    } catch (const InvalidSelection& err) {
        return std::string(err.what());
    }
}

// One plaintext integer per sub-vector. The chosen component's field gets a
// 1; every sub-vector gets a 1 in its count field so each running total
// counts every ballot it absorbed.
struct ChoiceVector {
    std::vector<mpz_class> subvectors;
};

inline ChoiceVector encode_selection(const Layout& layout, const Selection& selection) {
    const std::size_t chosen = component_index(layout, selection);
    ChoiceVector out;
    for (std::size_t sv = 0; sv < layout.subvector_count(); ++sv) {
        mpz_class value = mpz_class(1) << (layout.width * layout.choice_count(sv));
        if (sv == chosen / layout.capacity) {
            value += mpz_class(1) << (layout.width * (chosen % layout.capacity));
        }
        out.subvectors.push_back(value);
    }
    return out;
}

struct TallyVector {
    std::vector<std::uint64_t> counts;  // global component order
    std::uint64_t ballot_count = 0;
};

// Unpack decrypted sub-vector totals back into per-component counts. The
// count fields of all sub-vectors must agree, and any field pinned at the
// width's maximum is treated as a carried-over overflow rather than data.
inline TallyVector decode_tally(const Layout& layout, const std::vector<mpz_class>& sums) {
    if (sums.size() != layout.subvector_count()) {
        throw Error(layout.spec.contest_id + ": wrong sub-vector count");
    }
    const std::uint64_t mask = (std::uint64_t{1} << layout.width) - 1;
    TallyVector out;
    bool first = true;
    for (std::size_t sv = 0; sv < sums.size(); ++sv) {
        if (sgn(sums[sv]) < 0) throw Error("negative sub-vector total");
        mpz_class rest = sums[sv];
        const std::size_t fields = layout.choice_count(sv);
        for (std::size_t f = 0; f < fields; ++f) {
            const std::uint64_t count =
                mpz_class(rest & mpz_class(mask)).get_ui();
            if (count == mask) throw OverflowSuspected(layout.spec.contest_id + ": counter saturated");
            out.counts.push_back(count);
            rest >>= layout.width;
        }
        if (mpz_sizeinbase(rest.get_mpz_t(), 2) > 64) {
            throw OverflowSuspected(layout.spec.contest_id + ": ballot count overflow");
        }
        const std::uint64_t ballots = rest.get_ui();
        if (ballots >= mask) {
            throw OverflowSuspected(layout.spec.contest_id + ": ballot count saturated");
        }
        if (first) {
            out.ballot_count = ballots;
            first = false;
        } else if (ballots != out.ballot_count) {
            throw CountMismatch(layout.spec.contest_id + ": sub-vector ballot counts disagree");
        }
    }
    return out;
}

// Write-in names travel as their UTF-8 bytes read big-endian, encrypted
// under the same key as the choice vectors. Names are expected in
// composed (NFC) form; the library does not renormalize.
inline std::size_t writein_byte_limit(const paillier::PublicKey& pk) {
    return zkp::message_bit_bound(pk) / 8;
}

inline mpz_class writein_to_integer(const std::string& name, const paillier::PublicKey& pk) {
    if (name.size() > writein_byte_limit(pk)) {
        throw NameTooLong("write-in name exceeds " + std::to_string(writein_byte_limit(pk)) +
                          " bytes");
    }
    if (name.empty()) return 0;
    return be_to_mpz(reinterpret_cast<const std::uint8_t*>(name.data()), name.size());
}

inline paillier::Ciphertext encode_writein(const std::string& name, const paillier::PublicKey& pk,
                                           RandomSource& rng) {
    return paillier::encrypt(pk, writein_to_integer(name, pk), rng);
}

inline std::string decode_writein(const mpz_class& value) {
    if (sgn(value) == 0) return {};
    const Bytes bytes = bytes_be(value);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace urna::encoding
