#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urna/blindsig.hpp"
#include "urna/bytes.hpp"
#include "urna/election_spec.hpp"
#include "urna/encoding.hpp"
#include "urna/errors.hpp"
#include "urna/paillier.hpp"
#include "urna/session.hpp"
#include "urna/tally.hpp"
#include "urna/zkp.hpp"

// The double-envelope voting protocol. The outer envelope is the voter's
// authenticated session; the inner envelope is the anonymous ballot package
// whose only identifier is a digest of its own ciphertexts. The backend
// checks eligibility on the outer envelope and correctness proofs on the
// inner one, and nothing ties the two together afterwards.
namespace urna::election {

// ---------------------------------------------------------------------------
// Voter registry

struct VoterRecord {
    std::string voter_id;
    std::string state;
    std::string modality;
    bool voted = false;
};

// Eligibility list plus voted flags. The CSV is the enrollment snapshot;
// voted flags accrue in an append-only log so a restart never forgets who
// already cast.
class Registry {
  public:
    Registry() = default;

    Registry(std::filesystem::path csv, std::filesystem::path voted_log)
        : csv_(std::move(csv)), voted_log_(std::move(voted_log)) {
        if (!csv_.empty() && std::filesystem::exists(csv_)) load_csv();
        if (!voted_log_.empty() && std::filesystem::exists(voted_log_)) load_voted_log();
    }

    void add(const VoterRecord& record) {
        std::lock_guard<std::mutex> lock(mu_);
        if (index_.count(record.voter_id)) throw Error("duplicate voter: " + record.voter_id);
        index_[record.voter_id] = records_.size();
        records_.push_back(record);
    }

    std::optional<VoterRecord> find(const std::string& voter_id) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = index_.find(voter_id);
        if (it == index_.end()) return std::nullopt;
        return records_[it->second];
    }

    // The single commit decision of a submission: flips registered -> voted
    // exactly once. Returns false when someone already won the flip.
    bool try_mark_voted(const std::string& voter_id) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = index_.find(voter_id);
        if (it == index_.end()) throw UnknownVoter("no such voter: " + voter_id);
        VoterRecord& record = records_[it->second];
        if (record.voted) return false;
        record.voted = true;
        if (!voted_log_.empty()) {
            nlohmann::json j;
            j["voter_id"] = voter_id;
            j["at_us"] = std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
            std::ofstream out(voted_log_, std::ios::app);
            if (!out) throw Error("cannot append voted log");
            out << j.dump() << "\n";
        }
        return true;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_.size();
    }

    std::size_t voted_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        std::size_t count = 0;
        for (const VoterRecord& r : records_) count += r.voted ? 1 : 0;
        return count;
    }

    std::vector<VoterRecord> all() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }

    void save_csv() const {
        if (csv_.empty()) return;
        std::lock_guard<std::mutex> lock(mu_);
        std::ofstream out(csv_);
        if (!out) throw Error("cannot write " + csv_.string());
        out << "voter_id,state,modality\n";
        for (const VoterRecord& r : records_) {
            out << r.voter_id << "," << r.state << "," << r.modality << "\n";
        }
    }

  private:
    void load_csv() {
        std::ifstream in(csv_);
        std::string line;
        bool header = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (header) {
                header = false;
                continue;
            }
            const auto first = line.find(',');
            const auto second = line.find(',', first + 1);
            if (first == std::string::npos || second == std::string::npos) {
                throw Error("malformed registry row: " + line);
            }
            VoterRecord record{line.substr(0, first),
                               line.substr(first + 1, second - first - 1),
                               line.substr(second + 1), false};
            index_[record.voter_id] = records_.size();
            records_.push_back(std::move(record));
        }
    }

    void load_voted_log() {
        std::ifstream in(voted_log_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            auto it = index_.find(j.at("voter_id").get<std::string>());
            if (it != index_.end()) records_[it->second].voted = true;
        }
    }

    std::filesystem::path csv_;
    std::filesystem::path voted_log_;
    mutable std::mutex mu_;
    std::vector<VoterRecord> records_;
    std::map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Append-only hash-chained ledger of anonymous ballot ids

struct LedgerBlock {
    std::uint64_t index = 0;
    Bytes prev_hash;   // 32 bytes
    Bytes anon_id;     // 32 bytes; zeros in the genesis block
    std::int64_t timestamp_us = 0;
    Bytes block_hash;  // 32 bytes

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["index"] = index;
        j["prev_hash"] = to_hex(prev_hash);
        j["anon_id"] = to_hex(anon_id);
        j["timestamp_us"] = timestamp_us;
        j["block_hash"] = to_hex(block_hash);
        return j;
    }

    static LedgerBlock from_json(const nlohmann::json& j) {
        LedgerBlock b;
        b.index = j.at("index").get<std::uint64_t>();
        b.prev_hash = hex_to_bytes(j.at("prev_hash").get<std::string>());
        b.anon_id = hex_to_bytes(j.at("anon_id").get<std::string>());
        b.timestamp_us = j.at("timestamp_us").get<std::int64_t>();
        b.block_hash = hex_to_bytes(j.at("block_hash").get<std::string>());
        return b;
    }
};

inline Bytes ledger_block_hash(std::uint64_t index, const Bytes& prev_hash, const Bytes& anon_id,
                               std::int64_t timestamp_us) {
    Bytes material = u64_be(index);
    append(material, prev_hash);
    append(material, anon_id);
    append(material, u64_be(static_cast<std::uint64_t>(timestamp_us)));
    return sha256(material);
}

class Ledger {
  public:
    // An empty path keeps the chain in memory only.
    explicit Ledger(std::filesystem::path file = {}) : file_(std::move(file)) {
        if (!file_.empty() && std::filesystem::exists(file_)) {
            std::ifstream in(file_);
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty()) blocks_.push_back(LedgerBlock::from_json(nlohmann::json::parse(line)));
            }
        }
        if (blocks_.empty()) {
            LedgerBlock genesis;
            genesis.prev_hash.assign(32, 0);
            genesis.anon_id.assign(32, 0);
            genesis.timestamp_us = now_us();
            genesis.block_hash =
                ledger_block_hash(0, genesis.prev_hash, genesis.anon_id, genesis.timestamp_us);
            blocks_.push_back(genesis);
            persist(blocks_.back());
        }
    }

    const LedgerBlock& append(const Bytes& anon_id) {
        if (anon_id.size() != 32) throw Error("ledger: anon id must be 32 bytes");
        std::lock_guard<std::mutex> lock(mu_);
        LedgerBlock block;
        block.index = blocks_.back().index + 1;
        block.prev_hash = blocks_.back().block_hash;
        block.anon_id = anon_id;
        block.timestamp_us = now_us();
        block.block_hash =
            ledger_block_hash(block.index, block.prev_hash, block.anon_id, block.timestamp_us);
        blocks_.push_back(block);
        persist(blocks_.back());
        return blocks_.back();
    }

    std::size_t entry_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return blocks_.size() - 1;  // genesis carries no ballot
    }

    std::vector<LedgerBlock> blocks() const {
        std::lock_guard<std::mutex> lock(mu_);
        return blocks_;
    }

    // Index of the first block whose linkage or hash is wrong, if any.
    std::optional<std::size_t> first_broken_link() const {
        std::lock_guard<std::mutex> lock(mu_);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const LedgerBlock& b = blocks_[i];
            if (b.index != i) return i;
            const Bytes expected_prev =
                (i == 0) ? Bytes(32, 0) : blocks_[i - 1].block_hash;
            if (b.prev_hash != expected_prev) return i;
            if (b.block_hash != ledger_block_hash(b.index, b.prev_hash, b.anon_id, b.timestamp_us)) {
                return i;
            }
        }
        return std::nullopt;
    }

  private:
    static std::int64_t now_us() {
        return std::chrono::duration_cast<std::chrono::microseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

    void persist(const LedgerBlock& block) {
        if (file_.empty()) return;
        std::ofstream out(file_, std::ios::app);
        if (!out) throw Error("cannot append ledger");
        out << block.to_json().dump() << "\n";
    }

    std::filesystem::path file_;
    mutable std::mutex mu_;
    std::vector<LedgerBlock> blocks_;
};

// ---------------------------------------------------------------------------
// Anonymous ballot packages

struct ContestEntry {
    std::string contest_id;
    std::vector<paillier::Ciphertext> subvectors;
    std::vector<zkp::Proof> proofs;  // one per sub-vector
    paillier::Ciphertext writein;
    blindsig::Signature signature;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["contest_id"] = contest_id;
        j["subvectors"] = nlohmann::json::array();
        for (const auto& c : subvectors) j["subvectors"].push_back(to_hex(c.value));
        j["proofs"] = nlohmann::json::array();
        for (const auto& p : proofs) {
            j["proofs"].push_back({{"u", to_hex(p.u)},
                                   {"e", to_hex(mpz_class(p.e))},
                                   {"v", to_hex(p.v)},
                                   {"w", to_hex(p.w)}});
        }
        j["writein"] = to_hex(writein.value);
        j["signature"] = to_hex(signature.s);
        return j;
    }

    static ContestEntry from_json(const nlohmann::json& j) {
        ContestEntry entry;
        entry.contest_id = j.at("contest_id").get<std::string>();
        for (const auto& hex : j.at("subvectors")) {
            entry.subvectors.push_back(paillier::Ciphertext{from_hex(hex.get<std::string>())});
        }
        for (const auto& pj : j.at("proofs")) {
            zkp::Proof p;
            p.u = from_hex(pj.at("u").get<std::string>());
            p.e = static_cast<Challenge>(from_hex(pj.at("e").get<std::string>()).get_ui());
            p.v = from_hex(pj.at("v").get<std::string>());
            p.w = from_hex(pj.at("w").get<std::string>());
            entry.proofs.push_back(std::move(p));
        }
        entry.writein = paillier::Ciphertext{from_hex(j.at("writein").get<std::string>())};
        entry.signature = blindsig::Signature{from_hex(j.at("signature").get<std::string>())};
        return entry;
    }
};

// The inner envelope. state/modality route the tally; neither narrows below
// a reporting cohort, and no field derives from the voter's identity.
struct BallotPackage {
    std::string state;
    std::string modality;
    std::vector<ContestEntry> contests;  // ballot-style order

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["state"] = state;
        j["modality"] = modality;
        j["contests"] = nlohmann::json::array();
        for (const auto& entry : contests) j["contests"].push_back(entry.to_json());
        return j;
    }

    static BallotPackage from_json(const nlohmann::json& j) {
        BallotPackage package;
        package.state = j.at("state").get<std::string>();
        package.modality = j.at("modality").get<std::string>();
        for (const auto& ej : j.at("contests")) {
            package.contests.push_back(ContestEntry::from_json(ej));
        }
        return package;
    }
};

// The ballot's only name: a digest of every ciphertext it carries, in
// contest order. Identical for everyone who recomputes it, linked to no
// voter identity.
inline Bytes compute_anon_id(const BallotPackage& package) {
    Bytes material;
    for (const ContestEntry& entry : package.contests) {
        for (const auto& c : entry.subvectors) append(material, bytes_be(c.value));
        append(material, bytes_be(entry.writein.value));
    }
    return sha256(material);
}

class BallotStore {
  public:
    explicit BallotStore(std::filesystem::path dir = {}) : dir_(std::move(dir)) {
        if (dir_.empty()) return;
        std::filesystem::create_directories(dir_);
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".json") continue;
            std::ifstream in(entry.path());
            nlohmann::json j;
            in >> j;
            packages_[entry.path().stem().string()] = BallotPackage::from_json(j);
        }
    }

    void put(const std::string& anon_hex, const BallotPackage& package) {
        std::lock_guard<std::mutex> lock(mu_);
        packages_[anon_hex] = package;
        if (dir_.empty()) return;
        const auto file = dir_ / (anon_hex + ".json");
        const auto tmp = dir_ / (anon_hex + ".json.tmp");
        {
            std::ofstream out(tmp);
            if (!out) throw Error("cannot write ballot " + anon_hex);
            out << package.to_json().dump(2) << "\n";
        }
        std::filesystem::rename(tmp, file);
    }

    std::optional<BallotPackage> get(const std::string& anon_hex) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = packages_.find(anon_hex);
        if (it == packages_.end()) return std::nullopt;
        return it->second;
    }

    // Sorted, so every walk over the store is deterministic.
    std::vector<std::string> ids() const {
        std::lock_guard<std::mutex> lock(mu_);
        std::vector<std::string> out;
        for (const auto& [id, package] : packages_) out.push_back(id);
        return out;
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return packages_.size();
    }

  private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, BallotPackage> packages_;
};

// ---------------------------------------------------------------------------
// Voter-side ballot preparation

// Everything the voter's device derives for one contest before the backend
// ever sees it: ciphertexts, proofs, the signable digest, and the blinding
// of that digest.
struct PreparedContest {
    std::string contest_id;
    std::vector<paillier::Ciphertext> subvectors;
    std::vector<zkp::Proof> proofs;
    paillier::Ciphertext writein;
    mpz_class digest;
    blindsig::Mask mask;
    mpz_class blinded;
};

class Frontend {
  public:
    Frontend(const ElectionSpec& spec, paillier::PublicKey pk, blindsig::VerifyKey vk)
        : spec_(spec), layouts_(build_layouts(spec)), pk_(std::move(pk)), vk_(std::move(vk)) {}

    // Encrypt, prove, digest, and blind one whole ballot. Selections pair
    // positionally with the state's ballot style.
    std::vector<PreparedContest> prepare(const std::string& state,
                                         const std::vector<encoding::Selection>& selections,
                                         RandomSource& rng) const {
        const auto style = spec_.ballot_style(state);
        if (style.size() != selections.size()) {
            throw WrongBallotStyle("expected " + std::to_string(style.size()) +
                                   " selections for " + state);
        }
        std::vector<PreparedContest> prepared;
        for (std::size_t i = 0; i < style.size(); ++i) {
            const encoding::Layout& layout = layouts_.at(style[i]->contest.contest_id);
            PreparedContest contest;
            contest.contest_id = style[i]->contest.contest_id;

            const encoding::ChoiceVector cv = encoding::encode_selection(layout, selections[i]);
            for (const mpz_class& value : cv.subvectors) {
                const paillier::Randomizer x = paillier::draw_randomizer(pk_, rng);
                contest.subvectors.push_back(paillier::encrypt(pk_, value, x));
                contest.proofs.push_back(zkp::prove(pk_, value, x, rng));
            }
            const std::string writein_name =
                selections[i].kind == encoding::Selection::Kind::writein
                    ? selections[i].writein_name
                    : std::string{};
            contest.writein = encoding::encode_writein(writein_name, pk_, rng);

            contest.digest = tally::message_digest(contest.subvectors, contest.writein, vk_);
            const blindsig::Blinded blinded = blindsig::blind(vk_, contest.digest, rng);
            contest.mask = blinded.mask;
            contest.blinded = blinded.value;
            prepared.push_back(std::move(contest));
        }
        return prepared;
    }

    // Unblind the returned signatures, refuse bad ones, and assemble the
    // anonymous package.
    BallotPackage finalize(const std::string& state, const std::string& modality,
                           const std::vector<PreparedContest>& prepared,
                           const std::vector<mpz_class>& blind_signatures) const {
        if (blind_signatures.size() != prepared.size()) {
            throw SignatureInvalid("signature count does not match contest count");
        }
        BallotPackage package;
        package.state = state;
        package.modality = modality;
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            const blindsig::Signature sig =
                blindsig::unblind(blind_signatures[i], prepared[i].mask, vk_);
            if (!blindsig::verify(vk_, prepared[i].digest, sig)) {
                throw SignatureInvalid("backend returned an invalid signature for " +
                                       prepared[i].contest_id);
            }
            ContestEntry entry;
            entry.contest_id = prepared[i].contest_id;
            entry.subvectors = prepared[i].subvectors;
            entry.proofs = prepared[i].proofs;
            entry.writein = prepared[i].writein;
            entry.signature = sig;
            package.contests.push_back(std::move(entry));
        }
        return package;
    }

  private:
    ElectionSpec spec_;
    std::map<std::string, encoding::Layout> layouts_;
    paillier::PublicKey pk_;
    blindsig::VerifyKey vk_;
};

// ---------------------------------------------------------------------------
// Backend

struct ReceiptReport {
    bool found = false;
    bool signatures_ok = false;
    bool proofs_ok = false;
};

class Backend {
  public:
    Backend(ElectionSpec spec, paillier::PublicKey pk, blindsig::Keypair signer,
            Registry& registry, Ledger& ledger, BallotStore& store, tally::Pipeline& pipeline)
        : spec_(std::move(spec)),
          layouts_(build_layouts(spec_)),
          pk_(std::move(pk)),
          signer_(std::move(signer)),
          registry_(registry),
          ledger_(ledger),
          store_(store),
          pipeline_(pipeline) {}

    // --- outer envelope: session management ---

    // The voter sends an ephemeral public point; the backend answers with
    // its own and both sides now share the ratchet seed.
    Bytes handshake(const std::string& voter_id, const Bytes& voter_point) {
        if (!registry_.find(voter_id)) throw UnknownVoter("no such voter: " + voter_id);
        std::lock_guard<std::mutex> lock(sessions_mu_);
        if (sessions_.count(voter_id)) {
            throw SessionAlreadyActive("voter already has a session: " + voter_id);
        }
        EcdhKeypair server_key;
        const Bytes server_point = server_key.public_point();
        sessions_[voter_id] = Channel{Session::from_shared_x(server_key.derive_shared_x(voter_point))};
        return server_point;
    }

    void end_session(const std::string& voter_id) {
        std::lock_guard<std::mutex> lock(sessions_mu_);
        sessions_.erase(voter_id);
    }

    bool has_session(const std::string& voter_id) const {
        std::lock_guard<std::mutex> lock(sessions_mu_);
        return sessions_.count(voter_id) > 0;
    }

    // Open a sealed request, dispatch it, and seal the response under the
    // next ratchet key. Domain rejections travel back inside the envelope.
    Bytes handle_frame(const std::string& voter_id, const Bytes& frame, RandomSource& rng) {
        Channel* channel = nullptr;
        {
            std::lock_guard<std::mutex> lock(sessions_mu_);
            auto it = sessions_.find(voter_id);
            if (it == sessions_.end()) throw SessionInvalid("no session for " + voter_id);
            channel = &it->second;
        }
        const std::optional<Bytes> request_bytes = channel->open_frame(frame);
        if (!request_bytes) throw SessionInvalid("frame does not open under the session key");

        nlohmann::json response;
        try {
            response = dispatch(voter_id, nlohmann::json::parse(request_bytes->begin(),
                                                                request_bytes->end()));
        } catch (const Error& err) {
            response = {{"ok", false}, {"error", err.what()}};
        }
        const std::string text = response.dump();
        return channel->seal_frame(Bytes(text.begin(), text.end()), rng);
    }

    // --- inner envelope: the two protocol operations ---

    // Sign one blinded digest per contest of the voter's ballot style. Does
    // not change voting status; only a submitted ballot does that.
    std::vector<mpz_class> issue_blind_signatures(const std::string& voter_id,
                                                  const std::vector<mpz_class>& blinded) {
        const std::optional<VoterRecord> voter = registry_.find(voter_id);
        if (!voter) throw UnknownVoter("no such voter: " + voter_id);
        if (voter->voted) throw AlreadyVoted(voter_id + " already cast a ballot");
        if (blinded.size() != spec_.ballot_style(voter->state).size()) {
            throw WrongBallotStyle("digest count does not match the ballot style");
        }
        std::vector<mpz_class> signatures;
        signatures.reserve(blinded.size());
        for (const mpz_class& value : blinded) {
            signatures.push_back(blindsig::sign_blinded(signer_, value));
        }
        return signatures;
    }

    // Full submission: verify everything, then commit atomically. Returns
    // the ballot's anonymous id (the voter's receipt).
    std::string submit(const std::string& voter_id, const BallotPackage& package) {
        const std::optional<VoterRecord> voter = registry_.find(voter_id);
        if (!voter) throw UnknownVoter("no such voter: " + voter_id);
        if (voter->voted) throw AlreadyVoted(voter_id + " already cast a ballot");
        if (package.state != voter->state || package.modality != voter->modality) {
            throw WrongBallotStyle("package routed for a different cohort");
        }

        const auto style = spec_.ballot_style(voter->state);
        if (package.contests.size() != style.size()) {
            throw WrongBallotStyle("contest count does not match the ballot style");
        }
        for (std::size_t i = 0; i < style.size(); ++i) {
            const ContestEntry& entry = package.contests[i];
            if (entry.contest_id != style[i]->contest.contest_id) {
                throw WrongBallotStyle("contest order does not match the ballot style");
            }
            const encoding::Layout& layout = layouts_.at(entry.contest_id);
            if (entry.subvectors.size() != layout.subvector_count() ||
                entry.proofs.size() != entry.subvectors.size()) {
                throw WrongBallotStyle(entry.contest_id + ": wrong sub-vector shape");
            }
            if (!blindsig::verify(signer_.vk,
                                  tally::message_digest(entry.subvectors, entry.writein, signer_.vk),
                                  entry.signature)) {
                throw SignatureInvalid(entry.contest_id + ": ballot signature does not verify");
            }
            for (std::size_t sv = 0; sv < entry.subvectors.size(); ++sv) {
                if (!zkp::verify(pk_, entry.subvectors[sv], entry.proofs[sv])) {
                    throw ProofInvalid(entry.contest_id + ": sub-vector " + std::to_string(sv) +
                                       " proof does not verify");
                }
            }
        }

        const Bytes anon_id = compute_anon_id(package);
        const std::string anon_hex = to_hex(anon_id);

        // The status flip is the commit point: exactly one concurrent
        // submission for a voter can win it.
        if (!registry_.try_mark_voted(voter_id)) {
            throw AlreadyVoted(voter_id + " already cast a ballot");
        }
        store_.put(anon_hex, package);
        ledger_.append(anon_id);
        for (const ContestEntry& entry : package.contests) {
            tally::Message message;
            message.anon_id = anon_hex;
            message.key = tally::Key{entry.contest_id, package.state, package.modality};
            message.subvectors = entry.subvectors;
            message.writein = entry.writein;
            message.signature = entry.signature;
            pipeline_.enqueue(message);
        }
        return anon_hex;
    }

    // Anyone holding a receipt can ask whether the ballot is still exactly
    // as recorded.
    ReceiptReport verify_receipt(const std::string& anon_hex) const {
        ReceiptReport report;
        const std::optional<BallotPackage> package = store_.get(anon_hex);
        if (!package) return report;
        report.found = true;
        report.signatures_ok = true;
        report.proofs_ok = true;
        for (const ContestEntry& entry : package->contests) {
            if (!blindsig::verify(signer_.vk,
                                  tally::message_digest(entry.subvectors, entry.writein, signer_.vk),
                                  entry.signature)) {
                report.signatures_ok = false;
            }
            for (std::size_t sv = 0; sv < entry.subvectors.size(); ++sv) {
                if (sv >= entry.proofs.size() ||
                    !zkp::verify(pk_, entry.subvectors[sv], entry.proofs[sv])) {
                    report.proofs_ok = false;
                }
            }
        }
        return report;
    }

    const blindsig::VerifyKey& verify_key() const { return signer_.vk; }

  private:
    nlohmann::json dispatch(const std::string& voter_id, const nlohmann::json& request) {
        const std::string op = request.at("op").get<std::string>();
        if (op == "issue") {
            std::vector<mpz_class> blinded;
            for (const auto& hex : request.at("blinded")) {
                blinded.push_back(from_hex(hex.get<std::string>()));
            }
            const std::vector<mpz_class> signatures = issue_blind_signatures(voter_id, blinded);
            nlohmann::json out = {{"ok", true}, {"signatures", nlohmann::json::array()}};
            for (const mpz_class& s : signatures) out["signatures"].push_back(to_hex(s));
            return out;
        }
        if (op == "submit") {
            const std::string anon_hex =
                submit(voter_id, BallotPackage::from_json(request.at("package")));
            return {{"ok", true}, {"anon_id", anon_hex}};
        }
        throw Error("unknown operation: " + op);
    }

    ElectionSpec spec_;
    std::map<std::string, encoding::Layout> layouts_;
    paillier::PublicKey pk_;
    blindsig::Keypair signer_;
    Registry& registry_;
    Ledger& ledger_;
    BallotStore& store_;
    tally::Pipeline& pipeline_;

    mutable std::mutex sessions_mu_;
    std::map<std::string, Channel> sessions_;
};

// ---------------------------------------------------------------------------
// Whole-protocol driver for one voter, over the sealed channel

// Runs handshake -> issue -> submit exactly as a device would, including the
// ratchet. Returns the anonymous receipt id.
inline std::string cast_ballot(Backend& backend, const Frontend& frontend,
                               const std::string& voter_id, const std::string& state,
                               const std::string& modality,
                               const std::vector<encoding::Selection>& selections,
                               RandomSource& rng) {
    EcdhKeypair voter_key;
    const Bytes server_point = backend.handshake(voter_id, voter_key.public_point());
    Channel channel{Session::from_shared_x(voter_key.derive_shared_x(server_point))};

    const auto exchange = [&](const nlohmann::json& request) -> nlohmann::json {
        const std::string text = request.dump();
        const Bytes reply = backend.handle_frame(
            voter_id, channel.seal_frame(Bytes(text.begin(), text.end()), rng), rng);
        const std::optional<Bytes> opened = channel.open_frame(reply);
        if (!opened) throw SessionInvalid("response does not open under the session key");
        const nlohmann::json response = nlohmann::json::parse(opened->begin(), opened->end());
        if (!response.at("ok").get<bool>()) {
            throw Error(response.at("error").get<std::string>());
        }
        return response;
    };

    std::vector<PreparedContest> prepared = frontend.prepare(state, selections, rng);

    nlohmann::json issue_request = {{"op", "issue"}, {"blinded", nlohmann::json::array()}};
    for (const PreparedContest& contest : prepared) {
        issue_request["blinded"].push_back(to_hex(contest.blinded));
    }
    const nlohmann::json issued = exchange(issue_request);
    std::vector<mpz_class> blind_signatures;
    for (const auto& hex : issued.at("signatures")) {
        blind_signatures.push_back(from_hex(hex.get<std::string>()));
    }

    const BallotPackage package = frontend.finalize(state, modality, prepared, blind_signatures);
    const nlohmann::json submitted =
        exchange({{"op", "submit"}, {"package", package.to_json()}});
    backend.end_session(voter_id);
    return submitted.at("anon_id").get<std::string>();
}

}  // namespace urna::election
