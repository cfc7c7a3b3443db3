#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "urna/admin.hpp"
#include "urna/bench.hpp"
#include "urna/election.hpp"

namespace {

using namespace urna;

struct LifecycleState {
    std::string phase = "initialized";  // initialized -> keyed -> closed
    bool decrypted = false;
    bool reported = false;
};

LifecycleState load_state(const admin::Paths& paths) {
    if (!std::filesystem::exists(paths.state())) {
        throw LifecycleError("election directory is not initialized; run `urna init` first");
    }
    const nlohmann::json j = admin::detail::read_json(paths.state());
    LifecycleState state;
    state.phase = j.at("phase").get<std::string>();
    state.decrypted = j.value("decrypted", false);
    state.reported = j.value("reported", false);
    return state;
}

void save_state(const admin::Paths& paths, const LifecycleState& state) {
    admin::detail::write_json(paths.state(), {{"phase", state.phase},
                                              {"decrypted", state.decrypted},
                                              {"reported", state.reported}});
}

void require_phase(const LifecycleState& state, const std::string& phase,
                   const std::string& hint) {
    if (state.phase != phase) {
        throw LifecycleError("election is " + state.phase + ", not " + phase + "; " + hint);
    }
}

ElectionSpec load_spec(const admin::Paths& paths) {
    return ElectionSpec::from_json(admin::detail::read_json(paths.spec()));
}

paillier::Decryptor load_reconstructed(const admin::Paths& paths,
                                       const paillier::PublicKey& pk) {
    const auto file = paths.keys() / "reconstructed.json";
    if (!std::filesystem::exists(file)) {
        throw LifecycleError("decryption key not reconstructed; run `urna reconstruct` first");
    }
    const nlohmann::json j = admin::detail::read_json(file);
    return paillier::Decryptor(pk, from_hex(j.at("lambda").get<std::string>()),
                               from_hex(j.at("mu").get<std::string>()));
}

// ---------------------------------------------------------------------------

int cmd_init(const admin::Paths& paths, const std::string& spec_file, bool force) {
    if (std::filesystem::exists(paths.state()) && !force) {
        throw LifecycleError("directory already holds an election; use --force to start over");
    }
    const ElectionSpec spec = ElectionSpec::from_json(admin::detail::read_json(spec_file));
    if (force && std::filesystem::exists(paths.root)) {
        for (const auto& entry : std::filesystem::directory_iterator(paths.root)) {
            std::filesystem::remove_all(entry.path());
        }
    }
    std::filesystem::create_directories(paths.root);
    admin::detail::write_json(paths.spec(), spec.to_json());
    save_state(paths, LifecycleState{});
    std::printf("initialized %s\n", spec.election_id.c_str());
    std::printf("  states: %zu, modalities: %zu, contests: %zu\n", spec.states.size(),
                spec.modalities.size(), spec.contests.size());
    for (const ContestConfig& cfg : spec.contests) {
        const encoding::Layout layout = encoding::build_layout(cfg.contest, cfg.width);
        std::printf("  %s: %zu components in %zu sub-vector(s)\n",
                    cfg.contest.contest_id.c_str(), layout.components.size(),
                    layout.subvector_count());
    }
    return 0;
}

int cmd_ceremony(const admin::Paths& paths, unsigned shards, unsigned threshold, unsigned bits) {
    LifecycleState state = load_state(paths);
    require_phase(state, "initialized", "the ceremony runs once, before any ballot");
    const ElectionSpec spec = load_spec(paths);
    RandomSource& rng = system_rng();
    const admin::CeremonyResult result =
        admin::key_ceremony(spec, paths, shards, threshold, rng, bits);
    state.phase = "keyed";
    save_state(paths, state);
    std::printf("ceremony complete for %s\n", spec.election_id.c_str());
    std::printf("  key width: %u bits\n", result.pk.bits);
    std::printf("  shards: %u, threshold: %u\n", shards, threshold);
    for (const auto& file : result.shard_files) std::printf("  %s\n", file.c_str());
    return 0;
}

encoding::Selection random_selection(const encoding::ContestSpec& contest, RandomSource& rng) {
    static const std::vector<std::string> kNames = {"ANA", "LUIS", "SOFIA", "PEDRO"};
    const std::uint64_t roll = rng.u64() % 12;
    if (contest.allow_writein && roll == 0) {
        return encoding::Selection::for_writein(kNames[rng.u64() % kNames.size()]);
    }
    if (contest.allow_novote && roll == 1) return encoding::Selection::no_vote();
    if (!contest.coalitions.empty() && roll == 2) {
        return encoding::Selection::for_parties(
            contest.coalitions[rng.u64() % contest.coalitions.size()]);
    }
    return encoding::Selection::for_parties(
        {static_cast<unsigned>(rng.u64() % contest.parties.size())});
}

int cmd_simulate(const admin::Paths& paths, unsigned voters, unsigned workers,
                 unsigned duplicates, unsigned tampered, unsigned seed, double rate) {
    LifecycleState state = load_state(paths);
    require_phase(state, "keyed", "run the ceremony first, and simulate before closing");
    const ElectionSpec spec = load_spec(paths);
    const admin::PublicKeys keys = admin::load_public_keys(paths);
    const blindsig::Keypair signer = admin::load_signing_key(paths);

    election::Registry registry(paths.registry_csv(), paths.voted_log());
    std::vector<std::pair<std::string, std::string>> cohorts;
    for (const std::string& st : spec.states) {
        for (const std::string& mo : spec.modalities) cohorts.emplace_back(st, mo);
    }
    for (unsigned i = registry.size(); i < voters; ++i) {
        char voter_id[16];
        std::snprintf(voter_id, sizeof(voter_id), "V%06u", i + 1);
        const auto& [st, mo] = cohorts[i % cohorts.size()];
        registry.add({voter_id, st, mo, false});
    }
    registry.save_csv();

    election::Ledger ledger(paths.ledger());
    election::BallotStore store(paths.ballots());
    tally::Pipeline pipeline(keys.pk, keys.vk, paths.tally());
    election::Frontend frontend(spec, keys.pk, keys.vk);
    election::Backend backend(spec, keys.pk, signer, registry, ledger, store, pipeline);

    std::vector<election::VoterRecord> todo;
    for (const election::VoterRecord& voter : registry.all()) {
        if (!voter.voted && todo.size() < voters) todo.push_back(voter);
    }

    std::atomic<std::size_t> next{0};
    std::atomic<unsigned> accepted{0};
    std::atomic<unsigned> tamper_rejected{0};
    std::atomic<unsigned> failures{0};
    std::mutex receipts_mu;
    std::vector<std::string> receipts;

    const auto worker = [&] {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= todo.size()) return;
            const election::VoterRecord& voter = todo[index];
            SeededRandom rng(static_cast<std::uint64_t>(seed) * 1000003u + index);
            std::vector<encoding::Selection> selections;
            for (const ContestConfig* cfg : spec.ballot_style(voter.state)) {
                selections.push_back(random_selection(cfg->contest, rng));
            }
            try {
                if (index < tampered) {
                    auto prepared = frontend.prepare(voter.state, selections, rng);
                    prepared[0].subvectors[0] =
                        paillier::hom_scale(keys.pk, prepared[0].subvectors[0], 2);
                    prepared[0].digest = tally::message_digest(prepared[0].subvectors,
                                                               prepared[0].writein, keys.vk);
                    const blindsig::Blinded reblinded =
                        blindsig::blind(keys.vk, prepared[0].digest, rng);
                    prepared[0].mask = reblinded.mask;
                    prepared[0].blinded = reblinded.value;
                    std::vector<mpz_class> blinded;
                    for (const auto& contest : prepared) blinded.push_back(contest.blinded);
                    const auto signatures =
                        backend.issue_blind_signatures(voter.voter_id, blinded);
                    const election::BallotPackage package =
                        frontend.finalize(voter.state, voter.modality, prepared, signatures);
                    try {
                        backend.submit(voter.voter_id, package);
                        ++failures;  // a tampered ballot must never land
                    } catch (const ProofInvalid&) {
                        ++tamper_rejected;
                    }
                } else {
                    const std::string receipt =
                        election::cast_ballot(backend, frontend, voter.voter_id, voter.state,
                                              voter.modality, selections, rng);
                    ++accepted;
                    std::lock_guard<std::mutex> lock(receipts_mu);
                    receipts.push_back(receipt);
                }
            } catch (const Error&) {
                ++failures;
            }
            if (rate > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(
                    static_cast<double>(workers ? workers : 1) / rate));
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned i = 0; i < workers; ++i) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }

    unsigned duplicate_rejected = 0;
    for (unsigned i = 0; i < duplicates && i < receipts.size(); ++i) {
        const election::BallotPackage package = *store.get(receipts[i]);
        tally::Message replay;
        replay.anon_id = receipts[i];
        replay.key = tally::Key{package.contests[0].contest_id, package.state, package.modality};
        replay.subvectors = package.contests[0].subvectors;
        replay.writein = package.contests[0].writein;
        replay.signature = package.contests[0].signature;
        if (pipeline.enqueue(replay) == tally::Admission::duplicate) ++duplicate_rejected;
    }

    std::printf("simulated %zu voters\n", todo.size());
    std::printf("  accepted: %u\n", accepted.load());
    std::printf("  tampered ballots rejected: %u\n", tamper_rejected.load());
    std::printf("  duplicate submissions rejected: %u\n", duplicate_rejected);
    std::printf("  queued for tally: %zu\n", pipeline.pending_total());
    if (failures.load() > 0) {
        std::printf("  UNEXPECTED failures: %u\n", failures.load());
        return 2;
    }
    return 0;
}

int cmd_close(const admin::Paths& paths) {
    LifecycleState state = load_state(paths);
    if (state.phase == "initialized") {
        throw LifecycleError("nothing to close; the ceremony never ran");
    }
    const admin::PublicKeys keys = admin::load_public_keys(paths);
    tally::Pipeline pipeline(keys.pk, keys.vk, paths.tally());
    pipeline.drain();
    state.phase = "closed";
    save_state(paths, state);
    std::printf("election closed\n");
    for (const tally::Key& key : pipeline.keys()) {
        const tally::Totals totals = pipeline.totals(key);
        std::printf("  %s: %llu ballot(s) folded, %llu message(s) consumed\n",
                    key.to_string().c_str(),
                    static_cast<unsigned long long>(totals.ballot_count),
                    static_cast<unsigned long long>(totals.consumed));
    }
    const auto quarantined = pipeline.quarantined();
    if (!quarantined.empty()) {
        std::printf("  quarantined: %zu\n", quarantined.size());
    }
    return 0;
}

int cmd_reconstruct(const admin::Paths& paths, const std::vector<std::string>& shard_files) {
    LifecycleState state = load_state(paths);
    require_phase(state, "closed", "reconstruction must wait for the close");
    const ElectionSpec spec = load_spec(paths);
    const admin::PublicKeys keys = admin::load_public_keys(paths);

    std::vector<std::filesystem::path> files(shard_files.begin(), shard_files.end());
    const admin::ReconstructedKey rec = admin::reconstruct_key(files, spec.election_id);
    const paillier::Decryptor dec(keys.pk, rec.secrets.lambda, rec.secrets.mu);
    if (!admin::verify_probe(dec, paths)) {
        throw Error("reconstructed key fails the probe; wrong or corrupted shards");
    }
    admin::detail::write_json(paths.keys() / "reconstructed.json",
                              {{"election_id", spec.election_id},
                               {"lambda", to_hex(rec.secrets.lambda)},
                               {"mu", to_hex(rec.secrets.mu)}});
    std::printf("decryption key reconstructed from %zu shards and verified against the probe\n",
                files.size());
    return 0;
}

int cmd_decrypt(const admin::Paths& paths, unsigned partitions) {
    LifecycleState state = load_state(paths);
    require_phase(state, "closed", "decryption must wait for the close");
    const ElectionSpec spec = load_spec(paths);
    const admin::PublicKeys keys = admin::load_public_keys(paths);
    const paillier::Decryptor dec = load_reconstructed(paths, keys.pk);

    tally::Pipeline pipeline(keys.pk, keys.vk, paths.tally());
    const auto layouts = build_layouts(spec);
    const admin::DecodedTotals decoded = admin::decrypt_totals(dec, pipeline, layouts);

    election::BallotStore store(paths.ballots());
    const auto individual =
        admin::decrypt_ballots(dec, store, partitions, paths.reports() / "decrypted.jsonl");

    election::Ledger ledger(paths.ledger());
    election::Registry registry(paths.registry_csv(), paths.voted_log());
    const admin::CrossCheck checks =
        admin::cross_check(decoded, pipeline, individual, ledger, registry);
    const nlohmann::json report = admin::build_report(spec, decoded, individual, checks, layouts);
    admin::write_report_json(report, paths.reports() / "report.json");

    state.decrypted = true;
    save_state(paths, state);

    std::printf("decrypted %zu tally key(s) and %zu ballot record(s) with %u partition(s)\n",
                decoded.by_key.size(), individual.size(), partitions ? partitions : 1);
    std::printf("  ballots: decoded=%zu counters=%zu decrypted=%zu ledger=%zu voted=%zu\n",
                checks.decoded_ballots, checks.counter_ballots, checks.decrypted_ballots,
                checks.ledger_ballots, checks.voted_ballots);
    if (checks.consistent()) {
        std::printf("  cross-check: consistent\n");
    } else {
        std::printf("  cross-check: INCONSISTENT\n");
        for (const std::string& d : checks.divergences) std::printf("    %s\n", d.c_str());
    }
    return 0;
}

int cmd_report(const admin::Paths& paths, const std::string& format) {
    LifecycleState state = load_state(paths);
    if (!state.decrypted) {
        throw LifecycleError("nothing to report; run `urna decrypt` first");
    }
    const nlohmann::json report = admin::detail::read_json(paths.reports() / "report.json");
    if (format == "json" || format == "both") {
        admin::write_report_json(report, paths.reports() / "report.json");
        std::printf("wrote %s\n", (paths.reports() / "report.json").c_str());
    }
    if (format == "csv" || format == "both") {
        admin::write_report_csv(report, paths.reports() / "report.csv");
        std::printf("wrote %s\n", (paths.reports() / "report.csv").c_str());
    }
    state.reported = true;
    save_state(paths, state);

    const auto& ballots = report.at("ballots");
    std::printf("%s: %llu ballot(s), cross-check %s\n",
                report.at("election_id").get<std::string>().c_str(),
                ballots.at("decoded").get<unsigned long long>(),
                ballots.at("consistent").get<bool>() ? "consistent" : "INCONSISTENT");
    for (const auto& row : report.at("results")) {
        std::printf("  %s (%llu ballots)\n", row.at("key").get<std::string>().c_str(),
                    row.at("ballot_count").get<unsigned long long>());
        for (const auto& count : row.at("counts")) {
            const auto value = count.at("count").get<unsigned long long>();
            if (value > 0) {
                std::printf("    %-24s %llu\n", count.at("label").get<std::string>().c_str(),
                            value);
            }
        }
        for (const auto& writein : row.at("writeins")) {
            std::printf("    write-in %-15s %llu\n",
                        writein.at("name").get<std::string>().c_str(),
                        writein.at("count").get<unsigned long long>());
        }
    }
    return 0;
}

int cmd_audit(const admin::Paths& paths) {
    LifecycleState state = load_state(paths);
    if (state.phase == "initialized") {
        throw LifecycleError("nothing to audit; the ceremony never ran");
    }
    const ElectionSpec spec = load_spec(paths);
    const admin::PublicKeys keys = admin::load_public_keys(paths);
    const admin::AuditReport report = admin::audit(spec, keys.pk, keys.vk, paths);
    std::printf("audit of %s\n", spec.election_id.c_str());
    std::printf("  ledger chain: %s\n", report.ledger_ok ? "intact" : "BROKEN");
    std::printf("  ballots re-verified: %zu (%s)\n", report.ballots_checked,
                report.ballots_ok ? "all valid" : "PROBLEMS FOUND");
    std::printf("  envelope separation: %s\n",
                report.envelopes_separate ? "clean" : "VIOLATED");
    for (const std::string& problem : report.problems) {
        std::printf("  problem: %s\n", problem.c_str());
    }
    if (std::filesystem::exists(paths.reports() / "report.json")) {
        const nlohmann::json published =
            admin::detail::read_json(paths.reports() / "report.json");
        std::printf("  published figures: %s\n",
                    published.at("ballots").at("consistent").get<bool>() ? "consistent"
                                                                         : "INCONSISTENT");
    }
    return report.ok() ? 0 : 2;
}

int cmd_bench(unsigned contests, const std::string& mode, unsigned ballots, unsigned seed,
              unsigned bits) {
    const bool serial = mode == "serial" || mode == "both";
    const bool parallel = mode == "parallel" || mode == "both";
    std::printf("preparing %u-bit keys and %u contest(s), %u ballot(s) per cell\n", bits,
                contests, ballots);
    const std::vector<bench::Cell> cells =
        bench::run_grid(bits, contests, serial, parallel, ballots, seed);
    std::printf("%10s %10s %8s %10s %10s %10s %10s\n", "contests", "mode", "n", "min(ms)",
                "median", "mean", "max");
    for (const bench::Cell& cell : cells) {
        std::printf("%10u %10s %8zu %10.2f %10.2f %10.2f %10.2f\n", cell.contests,
                    cell.parallel ? "parallel" : "serial", cell.samples, cell.min_ms,
                    cell.median_ms, cell.mean_ms, cell.max_ms);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verifiable homomorphic voting engine"};
    app.require_subcommand(1);

    std::string dir = ".";
    if (const char* env = std::getenv("ELECTION_DIR")) dir = env;
    app.add_option("--dir", dir, "election directory")->envname("ELECTION_DIR");

    auto* init = app.add_subcommand("init", "stage an election from a spec file");
    std::string spec_file;
    bool force = false;
    init->add_option("spec", spec_file, "election spec JSON")->required();
    init->add_flag("--force", force, "discard any existing election in the directory");

    auto* ceremony = app.add_subcommand("ceremony", "generate keys and split the secrets");
    unsigned shards = 5, threshold = 3, bits = 0;
    ceremony->add_option("--shards", shards, "number of shards")->check(CLI::Range(2u, 99u));
    ceremony->add_option("--threshold", threshold, "shards needed to reconstruct")
        ->check(CLI::Range(2u, 99u));
    ceremony->add_option("--bits", bits, "key width override (defaults to the spec)");

    auto* simulate = app.add_subcommand("simulate", "drive synthetic voters end to end");
    unsigned voters = 25, workers = 4, duplicates = 0, tampered = 0, seed = 1;
    double rate = 0;
    simulate->add_option("--voters", voters, "voters to enroll and drive")->required();
    simulate->add_option("--workers", workers, "concurrent voter threads");
    simulate->add_option("--duplicates", duplicates, "replayed tally submissions afterwards");
    simulate->add_option("--tamper", tampered, "voters that submit a tampered ballot");
    simulate->add_option("--seed", seed, "randomness seed");
    simulate->add_option("--rate", rate, "max ballots per second (0 = unthrottled)");

    auto* close = app.add_subcommand("close", "stop intake and fold every queued ballot");

    auto* reconstruct = app.add_subcommand("reconstruct", "rebuild the decryption key");
    std::vector<std::string> shard_files;
    reconstruct->add_option("--shards", shard_files, "shard files (threshold-many)")
        ->required()
        ->expected(-1);

    auto* decrypt = app.add_subcommand("decrypt", "decrypt totals and individual ballots");
    unsigned partitions = 1;
    decrypt->add_option("--partitions", partitions, "decryption worker threads");

    auto* report = app.add_subcommand("report", "render the published result");
    std::string format = "both";
    report->add_option("--format", format, "json, csv, or both")
        ->check(CLI::IsMember({"json", "csv", "both"}));

    auto* audit = app.add_subcommand("audit", "re-verify every stored artifact");

    auto* bench_cmd = app.add_subcommand("bench", "time the per-ballot submission path");
    unsigned bench_contests = 5, bench_ballots = 100, bench_seed = 7, bench_bits = 1024;
    std::string bench_mode = "both";
    bench_cmd->add_option("--contests", bench_contests, "largest ballot style to time")
        ->check(CLI::Range(1u, 8u));
    bench_cmd->add_option("--mode", bench_mode, "serial, parallel, or both")
        ->check(CLI::IsMember({"serial", "parallel", "both"}));
    bench_cmd->add_option("--ballots", bench_ballots, "samples per cell");
    bench_cmd->add_option("--seed", bench_seed, "randomness seed");
    bench_cmd->add_option("--bits", bench_bits, "key width for the ephemeral keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 64;
    }

    const admin::Paths paths{std::filesystem::path(dir)};
    try {
        if (init->parsed()) return cmd_init(paths, spec_file, force);
        if (ceremony->parsed()) return cmd_ceremony(paths, shards, threshold, bits);
        if (simulate->parsed()) {
            return cmd_simulate(paths, voters, workers, duplicates, tampered, seed, rate);
        }
        if (close->parsed()) return cmd_close(paths);
        if (reconstruct->parsed()) return cmd_reconstruct(paths, shard_files);
        if (decrypt->parsed()) return cmd_decrypt(paths, partitions);
        if (report->parsed()) return cmd_report(paths, format);
        if (audit->parsed()) return cmd_audit(paths);
        if (bench_cmd->parsed()) {
            return cmd_bench(bench_contests, bench_mode, bench_ballots, bench_seed, bench_bits);
        }
    } catch (const Error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 2;
    }
    return 64;
}
