// Acceptance suite: runs every criterion and prints one PASS/FAIL line
// each. Exit code is the number of failed criteria.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "core/client.hpp"
#include "core/errors.hpp"
#include "core/grid.hpp"
#include "core/group.hpp"
#include "core/heatmap.hpp"
#include "core/http_server.hpp"
#include "core/psi.hpp"
#include "core/server.hpp"
#include "core/sim.hpp"
#include "core/threading.hpp"
#include "core/transport.hpp"

using namespace cps;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_double(double v, int prec = 1) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// ---------------------------------------------------------------------
// Criterion 1 artifacts feed criterion 4's audit.
struct Criterion1Artifacts {
    fs::path root;
    fs::path transcript_path;
    std::vector<fs::path> server_dirs;
    std::vector<fs::path> server_logs;
    std::vector<std::string> canary_digests;  // hex, never uploaded
    std::vector<std::string> canary_gps;      // JSON renderings of raw doubles
    std::size_t users_checked = 0;
    bool artifacts_ready = false;
};

Criterion1Artifacts g_c1;

SimConfig spec_default_scenario(std::uint64_t seed) {
    SimConfig cfg;  // defaults already match: 200 users, 10 carriers, 7 days,
                    // step 300, 50 contacts
    cfg.seed = seed;
    char region[16];
    std::snprintf(region, sizeof(region), "sim%02llu",
                  static_cast<unsigned long long>(seed));
    cfg.region = region;
    return cfg;
}

void collect_canaries(const SimConfig& cfg, const GridConfig& grid_in) {
    GridConfig grid = grid_in;
    grid.region = cfg.region;
    Population traces = generate_population(cfg, grid);
    const std::vector<std::string> carriers = carrier_ids(cfg);
    SeededRandom contact_rng(cfg.seed ^ 0xC0FFEEULL);
    seed_contacts(traces, carriers, cfg.n_contacts, contact_rng);

    std::set<std::string> carrier_digests;
    for (const std::string& c : carriers)
        for (const GpsPoint& p : traces.at(c))
            carrier_digests.insert(hash_interval(quantize(p, grid), grid).hex());

    std::size_t picked = 0;
    for (const auto& [name, trace] : traces) {
        if (std::find(carriers.begin(), carriers.end(), name) != carriers.end()) continue;
        for (std::size_t i = 0; i < trace.size() && picked < 24; i += 97) {
            const std::string digest = hash_interval(quantize(trace[i], grid), grid).hex();
            if (carrier_digests.contains(digest)) continue;  // legitimate overlap
            g_c1.canary_digests.push_back(digest);
            g_c1.canary_gps.push_back(nlohmann::json(trace[i].lat).dump());
            g_c1.canary_gps.push_back(nlohmann::json(trace[i].lon).dump());
            ++picked;
        }
        if (picked >= 24) break;
    }
}

Outcome criterion1_oracle_equivalence() {
    constexpr int kScenarios = 20;
    constexpr double kBudgetSec = 600.0;  // < 10 minutes total

    g_c1.root = fs::temp_directory_path() /
                ("cps-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(g_c1.root);
    g_c1.transcript_path = g_c1.root / "wire-transcript.jsonl";
    Transcript transcript(g_c1.transcript_path.string());

    const GridConfig base_grid{0.0005, 300, "sim", 0};
    collect_canaries(spec_default_scenario(1), base_grid);

    const auto t0 = Clock::now();
    std::size_t scenarios_done = 0;
    std::size_t users_total = 0;
    std::size_t users_checked = 0;
    std::size_t mismatches = 0;
    bool out_of_budget = false;

    for (int s = 1; s <= kScenarios; ++s) {
        const SimConfig cfg = spec_default_scenario(static_cast<std::uint64_t>(s));
        EndToEndOptions opts;
        opts.grid = base_grid;
        opts.workers = default_threads();
        opts.crypto_threads = 1;
        opts.transcript = &transcript;
        const fs::path data_dir = g_c1.root / ("server-" + cfg.region);
        const fs::path log_path = g_c1.root / ("server-" + cfg.region + ".log");
        opts.server_data_dir = data_dir.string();
        opts.server_log_path = log_path.string();
        g_c1.server_dirs.push_back(data_dir);
        g_c1.server_logs.push_back(log_path);
        opts.cancelled = [&] { return seconds_since(t0) > kBudgetSec; };

        const EndToEndResult result = end_to_end_check(cfg, opts);
        users_total += result.users_total;
        users_checked += result.users_checked;
        mismatches += result.mismatches;
        if (result.users_checked == result.users_total) ++scenarios_done;
        std::cerr << "    criterion 1: scenario " << s << "/" << kScenarios << " checked "
                  << result.users_checked << "/" << result.users_total << " users, "
                  << result.mismatches << " mismatches, elapsed "
                  << format_double(seconds_since(t0)) << "s\n";
        if (seconds_since(t0) > kBudgetSec) {
            out_of_budget = true;
            // Account for users the later scenarios never reached.
            users_total += static_cast<std::size_t>(kScenarios - s) * 190;
            break;
        }
    }

    const double elapsed = seconds_since(t0);
    g_c1.users_checked = users_checked;
    g_c1.artifacts_ready = true;

    std::string detail = std::to_string(scenarios_done) + "/20 scenarios, " +
                         std::to_string(users_checked) + "/" + std::to_string(users_total) +
                         " user checks, " + std::to_string(mismatches) +
                         " oracle mismatches, " + format_double(elapsed) + "s elapsed";
    if (mismatches > 0) return {false, detail + "; correctness FAILED"};
    if (out_of_budget || scenarios_done < kScenarios || elapsed >= kBudgetSec) {
        const double est_min =
            users_checked == 0
                ? 0.0
                : elapsed * (static_cast<double>(users_total) / users_checked) / 60.0;
        return {false, detail + "; runtime budget exceeded (extrapolated full run ~" +
                           format_double(est_min, 0) + " min on this " +
                           std::to_string(default_threads()) +
                           "-thread host; every completed check matched the oracle exactly)"};
    }
    return {true, detail};
}

Outcome criterion1b_reduced_scale() {
    std::size_t checked = 0, mismatches = 0;
    for (int s = 101; s <= 120; ++s) {
        SimConfig cfg;
        cfg.n_users = 12;
        cfg.n_carriers = 2;
        cfg.duration_days = 1;
        cfg.step_sec = 900;
        cfg.n_contacts = 10;
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.lat_min = 42.30;
        cfg.lat_max = 42.36;
        cfg.lon_min = -71.12;
        cfg.lon_max = -71.04;
        cfg.region = "mini" + std::to_string(s);
        EndToEndOptions opts;
        opts.workers = default_threads();
        const EndToEndResult result = end_to_end_check(cfg, opts);
        checked += result.users_checked;
        mismatches += result.mismatches;
        if (result.users_checked != result.users_total)
            return {false, "scenario " + std::to_string(s) + " did not complete"};
    }
    return {mismatches == 0, std::to_string(checked) + " user checks across 20 scenarios, " +
                                 std::to_string(mismatches) + " mismatches (ordered sets and " +
                                 "shuffled counts vs oracle)"};
}

Outcome criterion2_crypto_properties() {
    // Exhaustive sweep in the p = 23 test group.
    const GroupParams& t = GroupParams::test23();
    std::set<int> residues;
    for (int x = 1; x < 23; ++x) residues.insert((x * x) % 23);
    std::size_t checks = 0;
    for (int e : residues) {
        for (int a = 1; a <= 10; ++a) {
            for (int b = 1; b <= 10; ++b) {
                const std::vector<GroupElement> start{GroupElement{Bigint(e)}};
                const auto ab =
                    blind(blind(start, PrivateExponent{a}, t), PrivateExponent{b}, t);
                const auto ba =
                    blind(blind(start, PrivateExponent{b}, t), PrivateExponent{a}, t);
                if (ab[0].value != ba[0].value)
                    return {false, "commutativity failed in test23"};
                if (boost::multiprecision::powm(ab[0].value, t.q, t.p) != 1)
                    return {false, "subgroup closure failed in test23"};
                ++checks;
            }
        }
    }

    // 10^4 randomized checks in the production group.
    const GroupParams& g = GroupParams::modp2048();
    constexpr std::size_t kRandom = 10000;
    std::atomic<std::size_t> failures{0};
    parallel_for(kRandom, default_threads(), [&](std::size_t) {
        SecureRandom rng;
        HashedInterval h;
        rng.fill(h.digest);
        const std::vector<GroupElement> start{to_group(h, g)};
        const PrivateExponent a = keygen(g, rng);
        const PrivateExponent b = keygen(g, rng);
        const auto ab = blind(blind(start, a, g), b, g);
        const auto ba = blind(blind(start, b, g), a, g);
        if (ab[0].value != ba[0].value) ++failures;
        if (boost::multiprecision::powm(start[0].value, g.q, g.p) != 1) ++failures;
    });
    if (failures > 0)
        return {false, std::to_string(failures.load()) + " randomized failures in modp2048"};
    return {true, std::to_string(checks) + " exhaustive test23 checks + " +
                      std::to_string(kRandom) + " randomized modp2048 checks, all passed"};
}

Outcome criterion3_hand_computed_round() {
    const GroupParams& g = GroupParams::test23();
    SecureRandom rng;
    const PrivateExponent a{3}, b{4};

    const std::vector<GroupElement> start{GroupElement{Bigint(4)}};
    const auto client_blinded = blind(start, a, g);
    if (client_blinded[0].value != 18)
        return {false, "H^a: expected 18, got " + client_blinded[0].value.str()};

    const std::vector<GroupElement> carrier{GroupElement{Bigint(4)}};
    const ServerResponse resp =
        server_respond(client_blinded, b, carrier, PsiMode::ordered, g, rng);
    if (resp.double_blinded_client[0].value != 4)
        return {false, "H^ab: expected 4, got " + resp.double_blinded_client[0].value.str()};
    if (resp.carrier_blinded[0].value != 3)
        return {false, "H^b: expected 3, got " + resp.carrier_blinded[0].value.str()};

    const Bigint unblinded =
        boost::multiprecision::powm(resp.carrier_blinded[0].value, a.value, g.p);
    if (unblinded != 4) return {false, "H^ba: expected 4, got " + unblinded.str()};

    const MatchResult mr = client_intersect(resp.double_blinded_client, resp.carrier_blinded, a,
                                            PsiMode::ordered, g);
    if (mr.match_count != 1 || mr.matched_indices != std::vector<std::size_t>{0})
        return {false, "match not detected"};
    return {true, "intermediates 18, 4, 3, 4 reproduced; match detected"};
}

// Streaming multi-needle scan; returns needles found in the file.
std::vector<std::string> scan_file(const fs::path& path,
                                   const std::vector<std::string>& needles) {
    std::vector<std::string> hits;
    std::ifstream in(path, std::ios::binary);
    if (!in) return hits;
    std::size_t max_len = 0;
    for (const std::string& n : needles) max_len = std::max(max_len, n.size());
    const std::size_t chunk_size = 4 << 20;
    std::string carry, chunk(chunk_size, '\0');
    std::set<std::string> found;
    while (in) {
        in.read(chunk.data(), static_cast<std::streamsize>(chunk_size));
        const std::streamsize got = in.gcount();
        if (got <= 0) break;
        std::string window = carry + chunk.substr(0, static_cast<std::size_t>(got));
        for (const std::string& n : needles)
            if (!found.contains(n) && window.find(n) != std::string::npos) found.insert(n);
        carry = window.size() > max_len ? window.substr(window.size() - max_len)
                                        : std::move(window);
    }
    hits.assign(found.begin(), found.end());
    return hits;
}

Outcome criterion4_canary_audit() {
    if (!g_c1.artifacts_ready || g_c1.users_checked == 0)
        return {false, "no criterion-1 artifacts to audit"};
    std::vector<std::string> needles = g_c1.canary_digests;
    needles.insert(needles.end(), g_c1.canary_gps.begin(), g_c1.canary_gps.end());
    if (needles.size() < 40) return {false, "canary set unexpectedly small"};

    std::vector<fs::path> files{g_c1.transcript_path};
    for (const fs::path& dir : g_c1.server_dirs) {
        if (!fs::exists(dir)) continue;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
    }
    for (const fs::path& log : g_c1.server_logs)
        if (fs::exists(log)) files.push_back(log);

    std::uintmax_t bytes = 0;
    std::size_t hit_count = 0;
    std::string first_hit;
    for (const fs::path& f : files) {
        bytes += fs::file_size(f);
        const auto hits = scan_file(f, needles);
        if (!hits.empty() && first_hit.empty())
            first_hit = hits.front() + " in " + f.string();
        hit_count += hits.size();
    }
    if (hit_count > 0)
        return {false, std::to_string(hit_count) + " canary hits; first: " + first_hit};
    return {true, std::to_string(needles.size()) + " canaries absent from " +
                      std::to_string(files.size()) + " files (" +
                      std::to_string(bytes / (1024 * 1024)) +
                      " MiB of transcripts, journals and logs)"};
}

Outcome criterion5_limits() {
    ServerOptions opts;
    opts.grid = GridConfig{0.0005, 300, "x", 0};
    opts.regions = {"bos"};
    opts.group_name = "modp2048";
    opts.token = "tok";
    opts.now_fn = [] { return std::int64_t{1755000000}; };
    // Spec defaults: N = 120000 elements, 4 queries per key per day.
    CarrierService svc(opts);
    if (opts.limits.max_elems_per_exchange != 120000 || opts.limits.max_queries_per_day != 4)
        return {false, "defaults drifted"};
    InProcessTransport transport(svc);

    const GroupParams& g = GroupParams::modp2048();
    const std::string one = element_to_b64(GroupElement{Bigint(4)}, g);

    // N + 1 elements must be rejected with the oversize code.
    PsiRequest oversize;
    oversize.mode = PsiMode::ordered;
    oversize.client_key_id = "limit-probe";
    oversize.elements_b64.assign(120001, one);
    const std::uint64_t epoch_before = svc.epoch("bos");
    try {
        transport.psi("bos", oversize);
        return {false, "oversize exchange was accepted"};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::limit_oversize)
            return {false, std::string("oversize raised wrong code: ") + e.code_name()};
    }

    // The 5th exchange of the day must hit the quota code.
    PsiRequest small;
    small.mode = PsiMode::ordered;
    small.client_key_id = "quota-probe";
    small.elements_b64.assign(1, one);
    for (int i = 0; i < 4; ++i) transport.psi("bos", small);
    try {
        transport.psi("bos", small);
        return {false, "5th daily exchange was accepted"};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::quota_exhausted)
            return {false, std::string("quota raised wrong code: ") + e.code_name()};
    }
    if (svc.store_size("bos") != 0 || svc.epoch("bos") != epoch_before)
        return {false, "store changed during rejected exchanges"};
    return {true, "120001-element exchange -> limit_oversize; 5th daily exchange -> "
                  "quota_exhausted; store untouched"};
}

Outcome criterion6_retention() {
    auto clock = std::make_shared<std::int64_t>(1755000000);
    ServerOptions opts;
    opts.grid = GridConfig{0.0005, 300, "x", 0};
    opts.regions = {"bos"};
    opts.group_name = "test23";
    opts.token = "tok";
    opts.retention.d_days = 14;
    opts.now_fn = [clock] { return *clock; };
    CarrierService svc(opts);

    // Build a store spanning 30 days of entry ages via two upload batches.
    auto make_item = [](std::uint8_t tag, std::int64_t t_idx) {
        HashedInterval h{};
        h.digest[0] = tag;
        h.digest[1] = static_cast<std::uint8_t>(t_idx & 0xff);
        h.digest[2] = static_cast<std::uint8_t>((t_idx >> 8) & 0xff);
        h.digest[3] = static_cast<std::uint8_t>((t_idx >> 16) & 0xff);
        return UploadItem{h, t_idx};
    };
    std::vector<std::int64_t> all_times;
    std::vector<UploadItem> batch;
    for (int d = 0; d < 14; ++d) {
        const std::int64_t t_idx = (*clock - d * 86400) / 300 + d;
        batch.push_back(make_item(1, t_idx));
        all_times.push_back(t_idx * 300);
    }
    if (svc.upload("bos", batch, {}, "tok").accepted != 14) return {false, "batch A rejected"};
    *clock += 16 * 86400;
    batch.clear();
    for (int d = 0; d < 14; ++d) {
        const std::int64_t t_idx = (*clock - d * 86400) / 300 + d;
        batch.push_back(make_item(2, t_idx));
        all_times.push_back(t_idx * 300);
    }
    if (svc.upload("bos", batch, {}, "tok").accepted != 14) return {false, "batch B rejected"};

    // Independent filter over the known entry times.
    const std::int64_t cutoff = *clock - 14 * 86400;
    std::size_t expected_removed = 0;
    for (std::int64_t t : all_times)
        if (t < cutoff) ++expected_removed;
    if (expected_removed == 0) return {false, "fixture holds no stale entries"};

    const PurgeOutcome out = svc.purge_region("bos");
    if (out.entries_removed != expected_removed)
        return {false, "removed " + std::to_string(out.entries_removed) + ", oracle says " +
                           std::to_string(expected_removed)};
    if (svc.store_size("bos") != all_times.size() - expected_removed)
        return {false, "store size wrong after purge"};
    const PurgeOutcome again = svc.purge_region("bos");
    if (again.entries_removed != 0) return {false, "purge is not idempotent"};
    return {true, "28 entries spanning 30 days of ages; removed " +
                      std::to_string(out.entries_removed) +
                      " (= independent filter); re-run removed 0"};
}

Outcome criterion7_heatmap() {
    SeededRandom rng(4321);
    std::vector<PointInterval> intervals;
    for (int i = 0; i < 4000; ++i)
        intervals.push_back({static_cast<std::int32_t>(rng.below(300)),
                             static_cast<std::int32_t>(rng.below(300)),
                             static_cast<std::int64_t>(rng.below(288 * 2))});
    // Plus one deliberately rare cell that k = 5 suppresses.
    for (int i = 0; i < 4; ++i) intervals.push_back({9000 + i, 9000, 288 * 10});

    std::map<CoarseKey, std::uint64_t> oracle;
    for (const PointInterval& pi : intervals)
        ++oracle[coarsen(pi, 100, 288)];

    const auto k1 = build_heatmap(intervals, 100, 288, 1);
    if (k1.size() != oracle.size()) return {false, "k=1 cell count mismatch"};
    std::uint64_t k1_mass = 0;
    for (const HeatmapCell& c : k1) {
        if (oracle.at(CoarseKey{c.coarse_x, c.coarse_y, c.day_idx}) != c.count)
            return {false, "k=1 count mismatch"};
        k1_mass += c.count;
    }
    if (k1_mass != intervals.size()) return {false, "k=1 mass mismatch"};

    std::uint64_t oracle_suppressed = 0;
    for (const auto& [key, count] : oracle)
        if (count < 5) oracle_suppressed += count;
    if (oracle_suppressed == 0) return {false, "fixture suppresses nothing at k=5"};

    const auto k5 = build_heatmap(intervals, 100, 288, 5);
    std::uint64_t published = 0;
    for (const HeatmapCell& c : k5) {
        if (c.count < 5) return {false, "published count below k"};
        published += c.count;
    }
    if (intervals.size() - published != oracle_suppressed)
        return {false, "suppressed mass mismatch"};
    return {true, "k=1 equals brute-force group-by; k=5 published minimum >= 5, suppressed "
                  "mass " + std::to_string(oracle_suppressed) + " matches the oracle"};
}

Outcome criterion8_flatfile_attack() {
    SimConfig cfg;
    cfg.n_users = 6;
    cfg.n_carriers = 3;
    cfg.duration_days = 1;
    cfg.step_sec = 600;
    cfg.n_contacts = 6;
    cfg.seed = 808;
    cfg.lat_min = 42.350;
    cfg.lat_max = 42.365;
    cfg.lon_min = -71.070;
    cfg.lon_max = -71.050;
    cfg.region = "demo";
    GridConfig grid{0.0005, 300, "demo", 0};

    Population traces = generate_population(cfg, grid);
    const std::vector<std::string> carriers = carrier_ids(cfg);
    SeededRandom contact_rng(cfg.seed ^ 0xC0FFEEULL);
    seed_contacts(traces, carriers, cfg.n_contacts, contact_rng);

    ServerOptions sopts;
    sopts.grid = grid;
    sopts.regions = {"demo"};
    sopts.group_name = "modp2048";
    sopts.token = "tok";
    const std::int64_t sim_now = cfg.start_epoch + 86400 + 60;
    sopts.now_fn = [sim_now] { return sim_now; };
    CarrierService svc(sopts);

    Transcript transcript;  // in-memory; PSI-mode leakage audit below
    InProcessTransport transport(svc, &transcript);

    ClientConfig base;
    base.region = "demo";
    base.grid = grid;
    base.group_name = "modp2048";
    for (const std::string& c : carriers) {
        ClientConfig up = base;
        up.client_key_id = c;
        run_carrier_upload(traces.at(c), {}, up, "tok", 100, 288, transport);
    }

    const FlatfileSet flatfile = parse_flatfile(transport.flatfile("demo"));
    if (flatfile.empty()) return {false, "no carrier data exported"};
    const AttackReport in_box =
        flatfile_attack(flatfile, grid, cfg.lat_min, cfg.lat_max, cfg.lon_min, cfg.lon_max,
                        cfg.start_epoch, cfg.start_epoch + 86400, 1000000);
    if (in_box.enumerated_cells > 1000000) return {false, "demo box exceeds 10^6 intervals"};
    if (in_box.fraction != 1.0)
        return {false, "in-box recovery fraction " + format_double(in_box.fraction, 4) +
                           " != 1.0 (" + std::to_string(in_box.recovered) + "/" +
                           std::to_string(in_box.flatfile_size) + ")"};

    const AttackReport out_of_box = flatfile_attack(flatfile, grid, 10.0, 10.015, 10.0, 10.02,
                                                    cfg.start_epoch, cfg.start_epoch + 86400,
                                                    1000000);
    if (out_of_box.fraction != 0.0) return {false, "out-of-box recovery should be 0"};

    // PSI mode on the same data leaks only the intersection: run one user
    // and re-assert the canary audit on this exchange's transcript.
    const OracleResult oracle = oracle_contacts(traces, carriers, grid);
    const std::string subject = "u0005";
    ClientConfig cc = base;
    cc.client_key_id = subject;
    SecureRandom rng;
    const ExposureOutcome outcome =
        run_exposure_check(traces.at(subject), {}, cc, transport, rng);
    std::vector<PointInterval> got = outcome.matched_raw;
    std::sort(got.begin(), got.end());
    if (got != oracle.matched_raw.at(subject)) return {false, "PSI result != oracle"};

    const std::string wire = transcript.text();
    for (const GpsPoint& p : traces.at(subject)) {
        const PointInterval pi = quantize(p, grid);
        const std::string digest = hash_interval(pi, grid).hex();
        const bool carrier_has = flatfile.contains(HashedInterval::from_hex(digest));
        if (!carrier_has && wire.find(digest) != std::string::npos)
            return {false, "client digest leaked into the PSI transcript"};
        if (wire.find(nlohmann::json(p.lat).dump()) != std::string::npos)
            return {false, "raw GPS leaked into the PSI transcript"};
    }
    return {true, std::to_string(in_box.enumerated_cells) +
                      " intervals enumerated; in-box recovery 1.0, out-of-box 0.0; PSI " +
                      "transcript free of client digests and raw GPS"};
}

Outcome criterion9_boundary_detection() {
    const GridConfig grid{0.0005, 300, "edge", 0};
    ServerOptions sopts;
    sopts.grid = grid;
    sopts.regions = {"edge"};
    sopts.group_name = "modp2048";
    sopts.token = "tok";
    sopts.now_fn = [] { return std::int64_t{1755000000}; };
    CarrierService svc(sopts);
    InProcessTransport transport(svc);
    SecureRandom rng;

    // Carrier just west, user just east of one cell boundary, same moment.
    const double edge_lon = -71.0 - 0.0005 * 40;
    const std::int64_t t = 1755000000 - 600;
    const std::vector<GpsPoint> carrier{{42.3601, edge_lon - 0.0001, t}};
    const std::vector<GpsPoint> user{{42.3601, edge_lon + 0.0001, t}};

    ClientConfig base;
    base.region = "edge";
    base.grid = grid;
    base.group_name = "modp2048";
    run_carrier_upload(carrier, {}, base, "tok", 100, 288, transport);

    const PointInterval pc = quantize(carrier[0], grid);
    const PointInterval pu = quantize(user[0], grid);
    if (pc == pu || pc.t_idx != pu.t_idx || std::abs(pc.cell_x - pu.cell_x) > 1)
        return {false, "fixture is not a spatially adjacent same-time pair"};

    const ExposureOutcome with = run_exposure_check(user, {}, base, transport, rng);
    ClientConfig no_expand = base;
    no_expand.expand_spatial = false;
    const ExposureOutcome without = run_exposure_check(user, {}, no_expand, transport, rng);
    if (with.report.match_count != 1)
        return {false, "expansion failed to match the adjacent cell"};
    if (without.report.match_count != 0)
        return {false, "match without expansion should be impossible"};
    return {true, "adjacent cells at equal t_idx: matched with the 9-cell stencil, missed "
                  "without it"};
}

std::string cli_binary() {
    if (const char* env = std::getenv("CONTACTPSI_CLI_BIN")) return env;
    // Default to the build-tree layout: tests/acceptance -> tools/contactpsi.
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n > 0) {
        buf[n] = '\0';
        return (fs::path(buf).parent_path().parent_path() / "tools" / "contactpsi").string();
    }
    return "contactpsi";
}

struct CliRun {
    int exit_code = -1;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    CliRun result;
    const std::string cmd = cli_binary() + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return result;
    char buf[8192];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

Outcome criterion10_determinism() {
    // Golden encodings: independent of host endianness by construction.
    const GridConfig grid{0.0005, 300, "bos", 0};
    const PointInterval fix = quantize(GpsPoint{42.3601, -71.0589, 1600000000}, grid);
    if (!(fix == PointInterval{217882, 264720, 5333333}))
        return {false, "quantization golden drifted"};
    if (to_hex(canonical_bytes(PointInterval{0, 0, 0}, grid)) !=
        "50492d7631626f730000000000000000000000000000000000")
        return {false, "canonical encoding golden drifted"};
    if (hash_interval(PointInterval{0, 0, 0}, grid).hex() !=
        "b0296ef49bca3fabdb103b4828a7e1a49636da7fc2aa6a1269e8725511960890")
        return {false, "digest golden drifted"};

    // `sim run --seed 42` twice, byte-identical stdout.
    const fs::path dir = fs::temp_directory_path() /
                         ("cps-det-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        std::ofstream scenario(dir / "scenario.json");
        scenario << R"({"n_users": 10, "n_carriers": 2, "duration_days": 1, "step_sec": 900,
                        "n_contacts": 8, "lat_min": 42.35, "lat_max": 42.38,
                        "lon_min": -71.08, "lon_max": -71.04})";
    }
    const std::string cmd =
        "sim run --seed 42 --workers " + std::to_string(default_threads()) +
        " --scenario " + (dir / "scenario.json").string();
    const CliRun a = run_cli(cmd);
    const CliRun b = run_cli(cmd);
    fs::remove_all(dir);
    if (a.exit_code != 0 || b.exit_code != 0)
        return {false, "sim run exited " + std::to_string(a.exit_code) + "/" +
                           std::to_string(b.exit_code)};
    if (a.out.empty() || a.out != b.out) return {false, "sim run reports differ between runs"};
    return {true, "encoding goldens stable; `sim run --seed 42` byte-identical across runs (" +
                      std::to_string(a.out.size()) + " bytes)"};
}

}  // namespace

int main() {
    struct Criterion {
        std::string id;
        std::string name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria{
        {"1", "oracle equivalence at spec scale (20x 200 users, modp2048, <10 min)",
         criterion1_oracle_equivalence},
        {"1b", "oracle equivalence, reduced scale (informational)", criterion1b_reduced_scale},
        {"2", "crypto properties (exhaustive test23 + randomized modp2048)",
         criterion2_crypto_properties},
        {"3", "hand-computed round (p=23, H=4, a=3, b=4)", criterion3_hand_computed_round},
        {"4", "canary audit of criterion-1 artifacts", criterion4_canary_audit},
        {"5", "exchange limits (oversize + daily quota)", criterion5_limits},
        {"6", "retention purge (d=14 over 30 days of ages)", criterion6_retention},
        {"7", "heatmap aggregation and k-suppression", criterion7_heatmap},
        {"8", "flat-file attack demo vs PSI mode", criterion8_flatfile_attack},
        {"9", "boundary detection through spatial expansion", criterion9_boundary_detection},
        {"10", "determinism and golden encodings", criterion10_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::cerr << "running criterion " << c.id << ": " << c.name << "\n";
        Outcome outcome;
        try {
            outcome = c.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const bool informational = c.id == "1b";
        if (!outcome.pass && !informational) ++failures;
        std::printf("[%2s] %-68s %s\n     %s\n", c.id.c_str(), c.name.c_str(),
                    outcome.pass ? "PASS" : (informational ? "FAIL (informational)" : "FAIL"),
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    if (!g_c1.root.empty()) fs::remove_all(g_c1.root);
    std::printf("%d of %zu criteria failed\n", failures, criteria.size() - 1);
    return failures;
}
