#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "urna/election.hpp"
#include "urna/encoding.hpp"
#include "urna/shamir.hpp"
#include "urna/tally.hpp"

// Trustee-side operations: the key ceremony that splits the decryption
// secrets before any ballot exists, reconstruction after the close, and the
// decrypt/cross-check/report/audit chain that turns stored ciphertexts into
// a publishable result.
namespace urna::admin {

// ---------------------------------------------------------------------------
// Directory layout

struct Paths {
    std::filesystem::path root;

    std::filesystem::path spec() const { return root / "spec.json"; }
    std::filesystem::path registry_csv() const { return root / "registry.csv"; }
    std::filesystem::path voted_log() const { return root / "voted.jsonl"; }
    std::filesystem::path ledger() const { return root / "ledger.jsonl"; }
    std::filesystem::path ballots() const { return root / "ballots"; }
    std::filesystem::path tally() const { return root / "tally"; }
    std::filesystem::path shards() const { return root / "shards"; }
    std::filesystem::path reports() const { return root / "reports"; }
    std::filesystem::path keys() const { return root / "keys"; }
    std::filesystem::path public_keys() const { return keys() / "public.json"; }
    std::filesystem::path signing_key() const { return keys() / "signing.json"; }
    std::filesystem::path probe() const { return keys() / "probe.json"; }
    std::filesystem::path state() const { return root / "state.json"; }
};

namespace detail {

inline void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    std::filesystem::create_directories(file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + file.string());
        out << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, file);
}

inline nlohmann::json read_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read " + file.string());
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& err) {
        throw Error(file.string() + ": " + err.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Key ceremony

struct CeremonyResult {
    paillier::PublicKey pk;
    blindsig::Keypair signer;
    shamir::Params params;
    std::vector<std::filesystem::path> shard_files;
};

// Generates both keypairs, splits (lambda, mu) into M shards with threshold
// t, and persists the public material, the signing key, the shard files, and
// a probe ciphertext. The decryption secrets themselves never reach disk.
inline CeremonyResult key_ceremony(const ElectionSpec& spec, const Paths& paths,
                                   unsigned shard_count, unsigned threshold, RandomSource& rng,
                                   unsigned bits_override = 0) {
    const unsigned bits = bits_override ? bits_override : spec.key_bits;
    const paillier::Keypair paillier_keys = paillier::keygen(bits, rng);
    blindsig::Keypair signer = blindsig::keygen(bits, rng);

    CeremonyResult result;
    result.pk = paillier_keys.pub;
    result.params =
        shamir::Params{shard_count, threshold, next_prime_above(paillier_keys.pub.n)};
    const std::vector<shamir::Shard> shards = shamir::split(
        shamir::SecretPair{paillier_keys.priv.lambda, paillier_keys.priv.mu}, result.params,
        rng);

    std::filesystem::create_directories(paths.shards());
    for (std::size_t i = 0; i < shards.size(); ++i) {
        nlohmann::json j;
        j["version"] = 1;
        j["election_id"] = spec.election_id;
        j["shard_count"] = result.params.shard_count;
        j["threshold"] = result.params.threshold;
        j["prime"] = to_hex(result.params.prime);
        j["x"] = to_hex(shards[i].x);
        j["y"] = to_hex(shards[i].y);
        char name[32];
        std::snprintf(name, sizeof(name), "shard-%02zu.json", i + 1);
        const auto file = paths.shards() / name;
        detail::write_json(file, j);
        result.shard_files.push_back(file);
    }

    detail::write_json(paths.public_keys(),
                       {{"election_id", spec.election_id},
                        {"paillier_n", to_hex(paillier_keys.pub.n)},
                        {"paillier_bits", paillier_keys.pub.bits},
                        {"signing_n", to_hex(signer.vk.n)},
                        {"signing_e", to_hex(signer.vk.e)}});
    detail::write_json(paths.signing_key(), {{"election_id", spec.election_id},
                                             {"n", to_hex(signer.vk.n)},
                                             {"e", to_hex(signer.vk.e)},
                                             {"d", to_hex(signer.d)}});

    const paillier::Ciphertext probe = paillier::encrypt(paillier_keys.pub, 42, rng);
    detail::write_json(paths.probe(), {{"election_id", spec.election_id},
                                       {"ciphertext", to_hex(probe.value)},
                                       {"plaintext", 42}});

    result.signer = std::move(signer);
    return result;
}

struct PublicKeys {
    paillier::PublicKey pk;
    blindsig::VerifyKey vk;
};

inline PublicKeys load_public_keys(const Paths& paths) {
    const nlohmann::json j = detail::read_json(paths.public_keys());
    const mpz_class n = from_hex(j.at("paillier_n").get<std::string>());
    PublicKeys keys;
    keys.pk = paillier::PublicKey{n, n + 1, n * n, j.at("paillier_bits").get<unsigned>()};
    keys.vk = blindsig::VerifyKey{from_hex(j.at("signing_n").get<std::string>()),
                                  from_hex(j.at("signing_e").get<std::string>())};
    return keys;
}

inline blindsig::Keypair load_signing_key(const Paths& paths) {
    const nlohmann::json j = detail::read_json(paths.signing_key());
    blindsig::Keypair signer;
    signer.vk = blindsig::VerifyKey{from_hex(j.at("n").get<std::string>()),
                                    from_hex(j.at("e").get<std::string>())};
    signer.d = from_hex(j.at("d").get<std::string>());
    return signer;
}

// ---------------------------------------------------------------------------
// Reconstruction

struct ReconstructedKey {
    shamir::SecretPair secrets;
    shamir::Params params;
};

// Rebuilds (lambda, mu) from any threshold-many shard files of the same
// ceremony. Files from a different election or ceremony are refused.
inline ReconstructedKey reconstruct_key(const std::vector<std::filesystem::path>& shard_files,
                                        const std::string& election_id) {
    if (shard_files.empty()) throw InsufficientShards("no shard files given");
    std::vector<shamir::Shard> shards;
    shamir::Params params;
    for (const auto& file : shard_files) {
        nlohmann::json j = detail::read_json(file);
        if (j.value("version", 0) != 1) throw Error(file.string() + ": unknown shard version");
        if (j.at("election_id").get<std::string>() != election_id) {
            throw ElectionMismatch(file.string() + ": shard belongs to another election");
        }
        shamir::Params file_params{j.at("shard_count").get<unsigned>(),
                                   j.at("threshold").get<unsigned>(),
                                   from_hex(j.at("prime").get<std::string>())};
        if (shards.empty()) {
            params = file_params;
        } else if (file_params.shard_count != params.shard_count ||
                   file_params.threshold != params.threshold ||
                   file_params.prime != params.prime) {
            throw ElectionMismatch(file.string() + ": shard belongs to another ceremony");
        }
        shards.push_back(shamir::Shard{from_hex(j.at("x").get<std::string>()),
                                       from_hex(j.at("y").get<std::string>())});
    }
    ReconstructedKey key;
    key.params = params;
    key.secrets = shamir::reconstruct(shards, params);
    return key;
}

// Decrypts the ceremony's probe ciphertext: the cheapest proof that a
// reconstructed key is the right one before it touches any ballot.
inline bool verify_probe(const paillier::Decryptor& dec, const Paths& paths) {
    const nlohmann::json j = detail::read_json(paths.probe());
    const paillier::Ciphertext probe{from_hex(j.at("ciphertext").get<std::string>())};
    return paillier::decrypt(dec, probe) == j.at("plaintext").get<long>();
}

// ---------------------------------------------------------------------------
// Decryption

struct DecodedTotals {
    std::map<std::string, encoding::TallyVector> by_key;
    std::vector<std::pair<std::string, std::string>> faults;
};

// Decrypts and decodes every accumulated total. Keys whose decode fails are
// reported, not fatal: one poisoned accumulator must not block the rest of
// the count.
inline DecodedTotals decrypt_totals(const paillier::Decryptor& dec,
                                    const tally::Pipeline& pipeline,
                                    const std::map<std::string, encoding::Layout>& layouts) {
    DecodedTotals result;
    for (const tally::Key& key : pipeline.keys()) {
        const tally::Totals totals = pipeline.totals(key);
        if (totals.subvectors.empty()) continue;
        const std::string key_str = key.to_string();
        auto layout_it = layouts.find(key.contest_id);
        if (layout_it == layouts.end()) {
            result.faults.emplace_back(key_str, "no layout for contest " + key.contest_id);
            continue;
        }
        try {
            std::vector<mpz_class> plain;
            plain.reserve(totals.subvectors.size());
            for (const auto& c : totals.subvectors) plain.push_back(paillier::decrypt(dec, c));
            result.by_key[key_str] = encoding::decode_tally(layout_it->second, plain);
        } catch (const Error& err) {
            result.faults.emplace_back(key_str, err.what());
        }
    }
    return result;
}

struct DecryptedContest {
    std::string anon_id;
    std::string contest_id;
    std::string state;
    std::string modality;
    std::vector<mpz_class> plain;
    std::string writein;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["anon_id"] = anon_id;
        j["contest_id"] = contest_id;
        j["state"] = state;
        j["modality"] = modality;
        j["plain"] = nlohmann::json::array();
        for (const auto& value : plain) j["plain"].push_back(to_hex(value));
        j["writein"] = writein;
        return j;
    }
};

// Individually decrypts every stored ballot, split across `partitions`
// worker threads. The work list and the merged output are ordered by
// anonymous id, so the result is byte-identical for every partition count.
inline std::vector<DecryptedContest> decrypt_ballots(
    const paillier::Decryptor& dec, const election::BallotStore& store, unsigned partitions,
    const std::filesystem::path& out_file = {}) {
    if (partitions == 0) partitions = 1;

    struct Item {
        std::string anon_id;
        std::string state;
        std::string modality;
        const election::ContestEntry* entry;
    };
    const std::vector<std::string> ids = store.ids();
    std::vector<election::BallotPackage> packages;
    packages.reserve(ids.size());
    std::vector<Item> items;
    for (const std::string& id : ids) packages.push_back(*store.get(id));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (const election::ContestEntry& entry : packages[i].contests) {
            items.push_back(Item{ids[i], packages[i].state, packages[i].modality, &entry});
        }
    }

    std::vector<DecryptedContest> results(items.size());
    std::vector<std::exception_ptr> errors(partitions);
    const auto worker = [&](unsigned part) {
        try {
            const std::size_t begin = items.size() * part / partitions;
            const std::size_t end = items.size() * (part + 1) / partitions;
            for (std::size_t i = begin; i < end; ++i) {
                DecryptedContest out;
                out.anon_id = items[i].anon_id;
                out.contest_id = items[i].entry->contest_id;
                out.state = items[i].state;
                out.modality = items[i].modality;
                for (const auto& c : items[i].entry->subvectors) {
                    out.plain.push_back(paillier::decrypt(dec, c));
                }
                out.writein =
                    encoding::decode_writein(paillier::decrypt(dec, items[i].entry->writein));
                results[i] = std::move(out);
            }
        } catch (...) {
            errors[part] = std::current_exception();
        }
    };

    if (partitions == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (unsigned part = 0; part < partitions; ++part) threads.emplace_back(worker, part);
        for (auto& thread : threads) thread.join();
    }
    for (const auto& error : errors) {
        if (error) std::rethrow_exception(error);
    }

    if (!out_file.empty()) {
        std::filesystem::create_directories(out_file.parent_path());
        const auto tmp = out_file.string() + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw Error("cannot write " + out_file.string());
            for (const DecryptedContest& item : results) out << item.to_json().dump() << "\n";
        }
        std::filesystem::rename(tmp, out_file);
    }
    return results;
}

// ---------------------------------------------------------------------------
// Cross-checks

// The five independently derived ballot counts that must agree, reduced to
// plain numbers so faults in any source are injectable under test.
struct CrossInputs {
    std::map<std::string, std::size_t> decoded_by_key;    // decoded count fields
    std::map<std::string, std::size_t> counters_by_key;   // pipeline bookkeeping
    std::vector<DecryptedContest> individual;
    std::size_t ledger_entries = 0;
    std::vector<election::VoterRecord> voters;
};

struct CrossCheck {
    std::size_t decoded_ballots = 0;
    std::size_t counter_ballots = 0;
    std::size_t decrypted_ballots = 0;
    std::size_t ledger_ballots = 0;
    std::size_t voted_ballots = 0;
    std::vector<std::string> divergences;

    bool consistent() const { return divergences.empty(); }
};

namespace detail {

inline std::string cohort_of(const std::string& state, const std::string& modality) {
    return state + "@" + modality;
}

// Collapses per-contest figures to one number per cohort: within a cohort
// every contest must have seen every ballot, so disagreement between
// contests is itself a fault.
inline std::map<std::string, std::size_t> by_cohort(
    const std::map<std::string, std::size_t>& by_key, const std::string& figure,
    std::vector<std::string>& divergences) {
    std::map<std::string, std::map<std::string, std::size_t>> grouped;
    for (const auto& [key_str, count] : by_key) {
        const tally::Key key = tally::Key::parse(key_str);
        grouped[cohort_of(key.state, key.modality)][key.contest_id] = count;
    }
    std::map<std::string, std::size_t> out;
    for (const auto& [cohort, contests] : grouped) {
        std::size_t agreed = contests.begin()->second;
        bool all_equal = true;
        for (const auto& [contest_id, count] : contests) {
            if (count != agreed) all_equal = false;
            agreed = std::max(agreed, count);
        }
        if (!all_equal) {
            std::string detail = figure + " disagree across contests in " + cohort + ":";
            for (const auto& [contest_id, count] : contests) {
                detail += " " + contest_id + "=" + std::to_string(count);
            }
            divergences.push_back(detail);
        }
        out[cohort] = agreed;
    }
    return out;
}

}  // namespace detail

inline CrossCheck cross_check(const CrossInputs& in) {
    CrossCheck out;

    const auto decoded =
        detail::by_cohort(in.decoded_by_key, "decoded ballot counts", out.divergences);
    const auto counters =
        detail::by_cohort(in.counters_by_key, "tally counters", out.divergences);

    std::map<std::string, std::set<std::string>> decrypted_ids;
    std::set<std::string> all_ids;
    for (const DecryptedContest& item : in.individual) {
        decrypted_ids[detail::cohort_of(item.state, item.modality)].insert(item.anon_id);
        all_ids.insert(item.anon_id);
    }
    std::map<std::string, std::size_t> voted;
    for (const election::VoterRecord& voter : in.voters) {
        if (voter.voted) ++voted[detail::cohort_of(voter.state, voter.modality)];
    }

    std::set<std::string> cohorts;
    for (const auto& [cohort, count] : decoded) cohorts.insert(cohort);
    for (const auto& [cohort, count] : counters) cohorts.insert(cohort);
    for (const auto& [cohort, ids] : decrypted_ids) cohorts.insert(cohort);
    for (const auto& [cohort, count] : voted) cohorts.insert(cohort);

    const auto lookup = [](const std::map<std::string, std::size_t>& m,
                           const std::string& cohort) {
        auto it = m.find(cohort);
        return it == m.end() ? std::size_t{0} : it->second;
    };
    for (const std::string& cohort : cohorts) {
        const std::size_t from_decoded = lookup(decoded, cohort);
        const std::size_t from_counters = lookup(counters, cohort);
        const std::size_t from_decrypted =
            decrypted_ids.count(cohort) ? decrypted_ids[cohort].size() : 0;
        const std::size_t from_voted = lookup(voted, cohort);
        out.decoded_ballots += from_decoded;
        out.counter_ballots += from_counters;
        out.decrypted_ballots += from_decrypted;
        out.voted_ballots += from_voted;
        if (from_decoded != from_counters || from_decoded != from_decrypted ||
            from_decoded != from_voted) {
            out.divergences.push_back(
                cohort + ": decoded=" + std::to_string(from_decoded) +
                " counters=" + std::to_string(from_counters) +
                " decrypted=" + std::to_string(from_decrypted) +
                " voted=" + std::to_string(from_voted));
        }
    }
    out.ledger_ballots = in.ledger_entries;
    if (out.ledger_ballots != all_ids.size() || out.ledger_ballots != out.voted_ballots) {
        out.divergences.push_back("ledger=" + std::to_string(out.ledger_ballots) +
                                  " decrypted ids=" + std::to_string(all_ids.size()) +
                                  " voted=" + std::to_string(out.voted_ballots));
    }
    return out;
}

inline CrossCheck cross_check(const DecodedTotals& decoded, const tally::Pipeline& pipeline,
                              const std::vector<DecryptedContest>& individual,
                              const election::Ledger& ledger,
                              const election::Registry& registry) {
    CrossInputs in;
    for (const auto& [key_str, tv] : decoded.by_key) in.decoded_by_key[key_str] = tv.ballot_count;
    for (const tally::Key& key : pipeline.keys()) {
        in.counters_by_key[key.to_string()] = pipeline.totals(key).ballot_count;
    }
    in.individual = individual;
    in.ledger_entries = ledger.entry_count();
    in.voters = registry.all();
    CrossCheck out = cross_check(in);
    for (const auto& [key_str, what] : decoded.faults) {
        out.divergences.push_back(key_str + ": " + what);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reporting

// One figures object feeds every output format.
inline nlohmann::json build_report(const ElectionSpec& spec, const DecodedTotals& decoded,
                                   const std::vector<DecryptedContest>& individual,
                                   const CrossCheck& checks,
                                   const std::map<std::string, encoding::Layout>& layouts) {
    std::map<std::string, std::map<std::string, std::size_t>> writeins_by_key;
    for (const DecryptedContest& item : individual) {
        if (item.writein.empty()) continue;
        const std::string key_str =
            tally::Key{item.contest_id, item.state, item.modality}.to_string();
        ++writeins_by_key[key_str][item.writein];
    }

    nlohmann::json report;
    report["election_id"] = spec.election_id;
    report["generated_at_us"] = std::chrono::duration_cast<std::chrono::microseconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count();
    report["ballots"] = {{"decoded", checks.decoded_ballots},
                         {"counters", checks.counter_ballots},
                         {"decrypted", checks.decrypted_ballots},
                         {"ledger", checks.ledger_ballots},
                         {"voted", checks.voted_ballots},
                         {"consistent", checks.consistent()},
                         {"divergences", checks.divergences}};
    report["results"] = nlohmann::json::array();
    for (const auto& [key_str, tv] : decoded.by_key) {
        const tally::Key key = tally::Key::parse(key_str);
        const encoding::Layout& layout = layouts.at(key.contest_id);
        nlohmann::json row;
        row["key"] = key_str;
        row["contest_id"] = key.contest_id;
        row["state"] = key.state;
        row["modality"] = key.modality;
        row["ballot_count"] = tv.ballot_count;
        row["counts"] = nlohmann::json::array();
        for (std::size_t i = 0; i < layout.components.size(); ++i) {
            row["counts"].push_back({{"label", layout.label(i)}, {"count", tv.counts[i]}});
        }
        row["writeins"] = nlohmann::json::array();
        if (auto it = writeins_by_key.find(key_str); it != writeins_by_key.end()) {
            for (const auto& [name, count] : it->second) {
                row["writeins"].push_back({{"name", name}, {"count", count}});
            }
        }
        report["results"].push_back(std::move(row));
    }
    return report;
}

namespace detail {

inline std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

}  // namespace detail

inline void write_report_json(const nlohmann::json& report, const std::filesystem::path& file) {
    detail::write_json(file, report);
}

inline void write_report_csv(const nlohmann::json& report, const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + file.string());
        out << "contest_id,state,modality,row,label,count\n";
        for (const auto& row : report.at("results")) {
            const std::string prefix =
                detail::csv_field(row.at("contest_id").get<std::string>()) + "," +
                detail::csv_field(row.at("state").get<std::string>()) + "," +
                detail::csv_field(row.at("modality").get<std::string>()) + ",";
            out << prefix << "ballots,," << row.at("ballot_count").get<std::uint64_t>() << "\n";
            for (const auto& count : row.at("counts")) {
                out << prefix << "choice,"
                    << detail::csv_field(count.at("label").get<std::string>()) << ","
                    << count.at("count").get<std::uint64_t>() << "\n";
            }
            for (const auto& writein : row.at("writeins")) {
                out << prefix << "writein,"
                    << detail::csv_field(writein.at("name").get<std::string>()) << ","
                    << writein.at("count").get<std::uint64_t>() << "\n";
            }
        }
    }
    std::filesystem::rename(tmp, file);
}

// ---------------------------------------------------------------------------
// Audit

struct AuditReport {
    bool ledger_ok = false;
    bool ballots_ok = false;
    bool envelopes_separate = false;
    std::size_t ballots_checked = 0;
    std::vector<std::string> problems;

    bool ok() const { return problems.empty(); }
};

namespace detail {

inline std::string slurp_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace detail

// Structural audit over the stored artifacts, without decryption secrets:
// the ledger chain, ledger/store agreement, every signature and proof, and
// the separation of the two envelopes.
inline AuditReport audit(const ElectionSpec& spec, const paillier::PublicKey& pk,
                         const blindsig::VerifyKey& vk, const Paths& paths) {
    AuditReport report;
    const auto layouts = build_layouts(spec);

    election::Ledger ledger(paths.ledger());
    if (const auto broken = ledger.first_broken_link()) {
        report.problems.push_back("ledger: chain breaks at block " + std::to_string(*broken));
    } else {
        report.ledger_ok = true;
    }

    election::BallotStore store(paths.ballots());
    std::set<std::string> ledger_ids;
    for (const election::LedgerBlock& block : ledger.blocks()) {
        if (block.index > 0) ledger_ids.insert(to_hex(block.anon_id));
    }
    const std::vector<std::string> stored_ids = store.ids();
    for (const std::string& id : stored_ids) {
        if (!ledger_ids.count(id)) {
            report.problems.push_back("ballot " + id + " is stored but never entered the ledger");
        }
    }
    for (const std::string& id : ledger_ids) {
        if (!store.get(id)) {
            report.problems.push_back("ledger entry " + id + " has no stored ballot");
        }
    }

    bool all_ballots_ok = true;
    for (const std::string& id : stored_ids) {
        const election::BallotPackage package = *store.get(id);
        ++report.ballots_checked;
        if (to_hex(election::compute_anon_id(package)) != id) {
            report.problems.push_back("ballot " + id + ": contents do not match its id");
            all_ballots_ok = false;
            continue;
        }
        for (const election::ContestEntry& entry : package.contests) {
            if (!blindsig::verify(vk, tally::message_digest(entry.subvectors, entry.writein, vk),
                                  entry.signature)) {
                report.problems.push_back("ballot " + id + ": " + entry.contest_id +
                                          " signature does not verify");
                all_ballots_ok = false;
            }
            auto layout_it = layouts.find(entry.contest_id);
            if (layout_it == layouts.end() ||
                entry.subvectors.size() != layout_it->second.subvector_count() ||
                entry.proofs.size() != entry.subvectors.size()) {
                report.problems.push_back("ballot " + id + ": " + entry.contest_id +
                                          " has the wrong shape");
                all_ballots_ok = false;
                continue;
            }
            for (std::size_t sv = 0; sv < entry.subvectors.size(); ++sv) {
                if (!zkp::verify(pk, entry.subvectors[sv], entry.proofs[sv])) {
                    report.problems.push_back("ballot " + id + ": " + entry.contest_id +
                                              " proof " + std::to_string(sv) +
                                              " does not verify");
                    all_ballots_ok = false;
                }
            }
        }
    }
    report.ballots_ok = all_ballots_ok && !stored_ids.empty();

    std::string inner_text = detail::slurp_file(paths.ledger());
    if (std::filesystem::exists(paths.ballots())) {
        for (const auto& entry : std::filesystem::directory_iterator(paths.ballots())) {
            inner_text += detail::slurp_file(entry.path());
        }
    }
    const std::string outer_text =
        detail::slurp_file(paths.registry_csv()) + detail::slurp_file(paths.voted_log());

    bool separate = true;
    election::Registry registry(paths.registry_csv(), paths.voted_log());
    for (const election::VoterRecord& voter : registry.all()) {
        if (inner_text.find(voter.voter_id) != std::string::npos) {
            report.problems.push_back("voter " + voter.voter_id +
                                      " appears inside the anonymous records");
            separate = false;
        }
    }
    for (const std::string& id : ledger_ids) {
        if (outer_text.find(id) != std::string::npos) {
            report.problems.push_back("ballot " + id + " appears inside the voter records");
            separate = false;
        }
    }
    report.envelopes_separate = separate;
    return report;
}

}  // namespace urna::admin
