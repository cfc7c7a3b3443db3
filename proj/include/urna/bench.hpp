#pragma once

#include <algorithm>
#include <chrono>
#include <thread>
#include <vector>

#include "urna/blindsig.hpp"
#include "urna/encoding.hpp"
#include "urna/paillier.hpp"
#include "urna/tally.hpp"
#include "urna/zkp.hpp"

// Timing harness for the per-ballot submission path: issuing the blind
// signatures and verifying every contest's signature and proofs. Contests
// are independent, so the same work can run serially or one thread per
// contest; the harness measures both shapes.
namespace urna::bench {

struct Cell {
    unsigned contests = 0;
    bool parallel = false;
    std::size_t samples = 0;
    double min_ms = 0;
    double max_ms = 0;
    double mean_ms = 0;
    double median_ms = 0;
};

class Harness {
  public:
    Harness(unsigned bits, unsigned max_contests, RandomSource& rng)
        : paillier_keys_(paillier::keygen(bits, rng)), signer_(blindsig::keygen(bits, rng)) {
        encoding::ContestSpec contest;
        contest.contest_id = "bench";
        contest.parties = {"P1", "P2", "P3", "P4", "P5", "P6", "P7"};
        contest.coalitions = {{0, 1, 2}, {3, 4, 5}};
        contest.allow_writein = true;
        contest.allow_novote = true;
        const encoding::Layout layout = encoding::build_layout(contest);

        for (unsigned i = 0; i < max_contests; ++i) {
            Prepared prepared;
            const encoding::ChoiceVector cv = encoding::encode_selection(
                layout, encoding::Selection::for_parties(
                            {static_cast<unsigned>(i % contest.parties.size())}));
            for (const mpz_class& value : cv.subvectors) {
                const paillier::Randomizer x = paillier::draw_randomizer(paillier_keys_.pub, rng);
                prepared.subvectors.push_back(paillier::encrypt(paillier_keys_.pub, value, x));
                prepared.proofs.push_back(zkp::prove(paillier_keys_.pub, value, x, rng));
            }
            prepared.writein = paillier::encrypt(paillier_keys_.pub, 0, rng);
            const mpz_class digest =
                tally::message_digest(prepared.subvectors, prepared.writein, signer_.vk);
            const blindsig::Blinded blinded = blindsig::blind(signer_.vk, digest, rng);
            prepared.digest = digest;
            prepared.blinded = blinded.value;
            prepared.mask = blinded.mask;
            contests_.push_back(std::move(prepared));
        }
    }

    // One ballot's backend work over the first `contests` prepared contests.
    // Returns false if any verification failed, which would invalidate the
    // measurement.
    bool submit_once(unsigned contests, bool parallel) const {
        std::vector<char> ok(contests, 0);
        const auto work = [&](unsigned i) {
            const Prepared& contest = contests_[i];
            const mpz_class blind_signature = blindsig::sign_blinded(signer_, contest.blinded);
            const blindsig::Signature signature =
                blindsig::unblind(blind_signature, contest.mask, signer_.vk);
            bool good = blindsig::verify(
                signer_.vk,
                tally::message_digest(contest.subvectors, contest.writein, signer_.vk),
                signature);
            for (std::size_t sv = 0; good && sv < contest.subvectors.size(); ++sv) {
                good = zkp::verify(paillier_keys_.pub, contest.subvectors[sv], contest.proofs[sv]);
            }
            ok[i] = good ? 1 : 0;
        };
        if (parallel && contests > 1) {
            std::vector<std::thread> threads;
            for (unsigned i = 0; i < contests; ++i) threads.emplace_back(work, i);
            for (auto& thread : threads) thread.join();
        } else {
            for (unsigned i = 0; i < contests; ++i) work(i);
        }
        return std::all_of(ok.begin(), ok.end(), [](char c) { return c == 1; });
    }

    Cell measure(unsigned contests, bool parallel, std::size_t samples,
                 std::size_t warmup = 3) const {
        if (contests == 0 || contests > contests_.size()) {
            throw Error("bench: contest count outside the prepared range");
        }
        for (std::size_t i = 0; i < warmup; ++i) {
            if (!submit_once(contests, parallel)) throw Error("bench: warmup verification failed");
        }
        std::vector<double> times;
        times.reserve(samples);
        for (std::size_t i = 0; i < samples; ++i) {
            const auto start = std::chrono::steady_clock::now();
            const bool good = submit_once(contests, parallel);
            const auto stop = std::chrono::steady_clock::now();
            if (!good) throw Error("bench: verification failed mid-run");
            times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
        }
        std::sort(times.begin(), times.end());
        Cell cell;
        cell.contests = contests;
        cell.parallel = parallel;
        cell.samples = times.size();
        cell.min_ms = times.front();
        cell.max_ms = times.back();
        double total = 0;
        for (const double t : times) total += t;
        cell.mean_ms = total / static_cast<double>(times.size());
        const std::size_t mid = times.size() / 2;
        cell.median_ms =
            times.size() % 2 ? times[mid] : (times[mid - 1] + times[mid]) / 2.0;
        return cell;
    }

    const paillier::PublicKey& pk() const { return paillier_keys_.pub; }

  private:
    struct Prepared {
        std::vector<paillier::Ciphertext> subvectors;
        std::vector<zkp::Proof> proofs;
        paillier::Ciphertext writein;
        mpz_class digest;
        mpz_class blinded;
        blindsig::Mask mask;
    };

    paillier::Keypair paillier_keys_;
    blindsig::Keypair signer_;
    std::vector<Prepared> contests_;
};

// The full grid the benchmark tool runs: one cell per (contest count, mode).
inline std::vector<Cell> run_grid(unsigned bits, unsigned max_contests, bool serial,
                                  bool parallel, std::size_t samples, unsigned seed) {
    SeededRandom rng(seed);
    const Harness harness(bits, max_contests, rng);
    std::vector<Cell> cells;
    for (unsigned contests = 1; contests <= max_contests; ++contests) {
        if (serial) cells.push_back(harness.measure(contests, false, samples));
        if (parallel) cells.push_back(harness.measure(contests, true, samples));
    }
    return cells;
}

}  // namespace urna::bench
