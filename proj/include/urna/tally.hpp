#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "urna/blindsig.hpp"
#include "urna/bytes.hpp"
#include "urna/errors.hpp"
#include "urna/mathcore.hpp"
#include "urna/paillier.hpp"

// Ordered, exactly-once application of encrypted ballots onto running
// totals. Ballots are admitted at most once per (voter pseudonym, contest),
// queued per (contest, state, modality), and folded into that key's totals
// strictly in admission order by a single consumer at a time.
namespace urna::tally {

struct Key {
    std::string contest_id;
    std::string state;
    std::string modality;
    friend auto operator<=>(const Key&, const Key&) = default;

    // Ids are [A-Za-z0-9_-]+, so '@' cannot collide.
    std::string to_string() const { return contest_id + "@" + state + "@" + modality; }

    static Key parse(const std::string& text) {
        const auto first = text.find('@');
        const auto second = text.find('@', first + 1);
        if (first == std::string::npos || second == std::string::npos) {
            throw Error("malformed tally key: " + text);
        }
        return Key{text.substr(0, first), text.substr(first + 1, second - first - 1),
                   text.substr(second + 1)};
    }
};

// One contest's worth of one ballot, already anonymous: the voter appears
// only as the ballot-wide pseudonym.
struct Message {
    std::string anon_id;  // lowercase hex of the ballot pseudonym
    Key key;
    std::vector<paillier::Ciphertext> subvectors;
    paillier::Ciphertext writein;
    blindsig::Signature signature;

    // Replays of the same contest of the same ballot collapse to one entry.
    std::string dedup_key() const { return anon_id + "/" + key.contest_id; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["anon_id"] = anon_id;
        j["contest_id"] = key.contest_id;
        j["state"] = key.state;
        j["modality"] = key.modality;
        j["subvectors"] = nlohmann::json::array();
        for (const auto& c : subvectors) j["subvectors"].push_back(to_hex(c.value));
        j["writein"] = to_hex(writein.value);
        j["signature"] = to_hex(signature.s);
        return j;
    }

    static Message from_json(const nlohmann::json& j) {
        Message m;
        m.anon_id = j.at("anon_id").get<std::string>();
        m.key = Key{j.at("contest_id").get<std::string>(), j.at("state").get<std::string>(),
                    j.at("modality").get<std::string>()};
        for (const auto& hex : j.at("subvectors")) {
            m.subvectors.push_back(paillier::Ciphertext{from_hex(hex.get<std::string>())});
        }
        m.writein = paillier::Ciphertext{from_hex(j.at("writein").get<std::string>())};
        m.signature = blindsig::Signature{from_hex(j.at("signature").get<std::string>())};
        return m;
    }
};

// The digest the voter's device signed: all choice ciphertexts in
// sub-vector order, then the write-in ciphertext. Recomputed from the
// message itself, so any ciphertext swapped after signing breaks the
// signature.
inline mpz_class message_digest(const std::vector<paillier::Ciphertext>& subvectors,
                                const paillier::Ciphertext& writein,
                                const blindsig::VerifyKey& vk) {
    Bytes choices;
    for (const auto& c : subvectors) append(choices, bytes_be(c.value));
    return digest_concat(choices, bytes_be(writein.value), vk.n);
}

inline mpz_class message_digest(const Message& m, const blindsig::VerifyKey& vk) {
    return message_digest(m.subvectors, m.writein, vk);
}

struct Totals {
    std::vector<paillier::Ciphertext> subvectors;  // encrypted running sums
    std::uint64_t ballot_count = 0;
    std::uint64_t consumed = 0;  // queue positions processed, incl. rejects
    std::int64_t updated_at_us = 0;
};

struct Quarantined {
    Message message;
    std::string reason;
};

enum class Admission { accepted, duplicate };
enum class Outcome { applied, rejected, idle };

class Pipeline {
  public:
    // An empty dir keeps the pipeline purely in memory; otherwise queue
    // appends, totals, and quarantine survive restarts and a fresh Pipeline
    // over the same dir resumes exactly where the last one stopped.
    Pipeline(paillier::PublicKey pk, blindsig::VerifyKey vk, std::filesystem::path dir = {})
        : pk_(std::move(pk)), vk_(std::move(vk)), dir_(std::move(dir)) {
        if (!dir_.empty()) {
            std::filesystem::create_directories(dir_ / "queues");
            std::filesystem::create_directories(dir_ / "totals");
            reload();
        }
    }

    Admission enqueue(const Message& message) {
        std::lock_guard<std::mutex> lock(mu_);
        if (!seen_.insert(message.dedup_key()).second) return Admission::duplicate;
        pending_[message.key].push_back(message);
        touch_key(message.key);
        if (!dir_.empty()) {
            append_line(dir_ / "queues" / (message.key.to_string() + ".jsonl"),
                        message.to_json().dump());
        }
        return Admission::accepted;
    }

    // Applies (or rejects) the oldest unprocessed message of one key. The
    // per-key lock makes the read-verify-update-write sequence atomic per
    // key, which is exactly the discipline the unsafe path below drops.
    Outcome process_next(const Key& key) {
        std::lock_guard<std::mutex> serial(consumer_mutex(key));

        Message message;
        Totals totals;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = pending_.find(key);
            if (it == pending_.end() || it->second.empty()) return Outcome::idle;
            message = it->second.front();
            it->second.pop_front();
            totals = totals_[key];
        }

        const bool valid = verify_message(message);
        if (valid) {
            if (totals.subvectors.empty()) {
                totals.subvectors.assign(message.subvectors.size(), paillier::Ciphertext{1});
            }
            if (totals.subvectors.size() == message.subvectors.size()) {
                for (std::size_t i = 0; i < totals.subvectors.size(); ++i) {
                    totals.subvectors[i] =
                        paillier::hom_add(pk_, totals.subvectors[i], message.subvectors[i]);
                }
                totals.ballot_count += 1;
            } else {
                quarantine(message, "sub-vector count differs from this key's totals");
                advance_consumed(key);
                return Outcome::rejected;
            }
        } else {
            quarantine(message, "signature does not match the ciphertexts");
            advance_consumed(key);
            return Outcome::rejected;
        }

        totals.consumed += 1;
        totals.updated_at_us = now_us();
        {
            std::lock_guard<std::mutex> lock(mu_);
            totals_[key] = totals;
        }
        if (!dir_.empty()) persist_totals(key, totals);
        return Outcome::applied;
    }

    // Processes every queue to exhaustion; returns how many were applied.
    std::size_t drain() {
        std::size_t applied = 0;
        for (const Key& key : keys()) {
            while (true) {
                const Outcome outcome = process_next(key);
                if (outcome == Outcome::idle) break;
                if (outcome == Outcome::applied) ++applied;
            }
        }
        return applied;
    }

    Totals totals(const Key& key) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = totals_.find(key);
        return it == totals_.end() ? Totals{} : it->second;
    }

    std::vector<Key> keys() const {
        std::lock_guard<std::mutex> lock(mu_);
        std::vector<Key> out;
        for (const Key& key : known_keys_) out.push_back(key);
        return out;
    }

    std::size_t pending(const Key& key) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = pending_.find(key);
        return it == pending_.end() ? 0 : it->second.size();
    }

    std::size_t pending_total() const {
        std::lock_guard<std::mutex> lock(mu_);
        std::size_t total = 0;
        for (const auto& [key, queue] : pending_) total += queue.size();
        return total;
    }

    std::vector<Quarantined> quarantined() const {
        std::lock_guard<std::mutex> lock(mu_);
        return quarantine_;
    }

    // Deliberately broken application path that models concurrent stateless
    // consumers without the per-key serialization: it snapshots the totals,
    // computes off-lock, then writes the stale snapshot back. Two such calls
    // interleaving on one key lose a ballot. Test use only.
    void unsafe_read_modify_write(const Message& message) {
        Totals totals;
        {
            std::lock_guard<std::mutex> lock(mu_);
            totals = totals_[message.key];
            touch_key(message.key);
        }
        if (!verify_message(message)) return;
        if (totals.subvectors.empty()) {
            totals.subvectors.assign(message.subvectors.size(), paillier::Ciphertext{1});
        }
        for (std::size_t i = 0; i < totals.subvectors.size(); ++i) {
            totals.subvectors[i] =
                paillier::hom_add(pk_, totals.subvectors[i], message.subvectors[i]);
        }
        totals.ballot_count += 1;
        std::this_thread::yield();  // the window where another consumer lands
        {
            std::lock_guard<std::mutex> lock(mu_);
            totals_[message.key] = totals;
        }
    }

  private:
    static std::int64_t now_us() {
        return std::chrono::duration_cast<std::chrono::microseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

    bool verify_message(const Message& message) const {
        return blindsig::verify(vk_, message_digest(message, vk_), message.signature);
    }

    std::mutex& consumer_mutex(const Key& key) {
        std::lock_guard<std::mutex> lock(mu_);
        auto& slot = consumer_mu_[key];
        if (!slot) slot = std::make_unique<std::mutex>();
        return *slot;
    }

    void touch_key(const Key& key) { known_keys_.insert(key); }

    void quarantine(const Message& message, const std::string& reason) {
        std::lock_guard<std::mutex> lock(mu_);
        quarantine_.push_back(Quarantined{message, reason});
        if (!dir_.empty()) {
            nlohmann::json j = message.to_json();
            j["reason"] = reason;
            append_line(dir_ / "quarantine.jsonl", j.dump());
        }
    }

    void advance_consumed(const Key& key) {
        Totals totals;
        {
            std::lock_guard<std::mutex> lock(mu_);
            totals_[key].consumed += 1;
            totals_[key].updated_at_us = now_us();
            totals = totals_[key];
        }
        if (!dir_.empty()) persist_totals(key, totals);
    }

    static void append_line(const std::filesystem::path& file, const std::string& line) {
        std::ofstream out(file, std::ios::app);
        if (!out) throw Error("cannot append to " + file.string());
        out << line << "\n";
    }

    void persist_totals(const Key& key, const Totals& totals) {
        nlohmann::json j;
        j["consumed"] = totals.consumed;
        j["ballot_count"] = totals.ballot_count;
        j["updated_at_us"] = totals.updated_at_us;
        j["subvectors"] = nlohmann::json::array();
        for (const auto& c : totals.subvectors) j["subvectors"].push_back(to_hex(c.value));

        const auto file = dir_ / "totals" / (key.to_string() + ".json");
        const auto tmp = dir_ / "totals" / (key.to_string() + ".json.tmp");
        {
            std::ofstream out(tmp);
            if (!out) throw Error("cannot write " + tmp.string());
            out << j.dump(2) << "\n";
        }
        std::filesystem::rename(tmp, file);
    }

    // Rebuilds memory from the queue files: everything before a key's
    // consumed mark has been folded into its persisted totals; the rest is
    // pending again. Admission history spans the whole queue file, so a
    // duplicate stays a duplicate across restarts.
    void reload() {
        for (const auto& entry : std::filesystem::directory_iterator(dir_ / "totals")) {
            if (entry.path().extension() != ".json") continue;
            const Key key = Key::parse(entry.path().stem().string());
            std::ifstream in(entry.path());
            nlohmann::json j;
            in >> j;
            Totals totals;
            totals.consumed = j.at("consumed").get<std::uint64_t>();
            totals.ballot_count = j.at("ballot_count").get<std::uint64_t>();
            totals.updated_at_us = j.at("updated_at_us").get<std::int64_t>();
            for (const auto& hex : j.at("subvectors")) {
                totals.subvectors.push_back(paillier::Ciphertext{from_hex(hex.get<std::string>())});
            }
            totals_[key] = totals;
            touch_key(key);
        }
        for (const auto& entry : std::filesystem::directory_iterator(dir_ / "queues")) {
            if (entry.path().extension() != ".jsonl") continue;
            const Key key = Key::parse(entry.path().stem().string());
            touch_key(key);
            std::ifstream in(entry.path());
            std::string line;
            std::uint64_t position = 0;
            const std::uint64_t consumed =
                totals_.count(key) ? totals_.at(key).consumed : 0;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const Message message = Message::from_json(nlohmann::json::parse(line));
                seen_.insert(message.dedup_key());
                if (position >= consumed) pending_[key].push_back(message);
                ++position;
            }
        }
    }

    paillier::PublicKey pk_;
    blindsig::VerifyKey vk_;
    std::filesystem::path dir_;

    mutable std::mutex mu_;
    std::set<std::string> seen_;
    std::set<Key> known_keys_;
    std::map<Key, std::deque<Message>> pending_;
    std::map<Key, Totals> totals_;
    std::map<Key, std::unique_ptr<std::mutex>> consumer_mu_;
    std::vector<Quarantined> quarantine_;
};

}  // namespace urna::tally
