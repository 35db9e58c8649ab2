#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/client.hpp"
#include "core/grid.hpp"
#include "core/transport.hpp"

namespace cps {

// Synthetic population: random-waypoint walkers in a bounding box, sampled
// every step_sec. The seed fully determines every trace.
struct SimConfig {
    int n_users = 200;
    int n_carriers = 10;
    double lat_min = 42.30;
    double lat_max = 42.42;
    double lon_min = -71.15;
    double lon_max = -71.00;
    int duration_days = 7;
    std::int64_t step_sec = 300;
    double speed_min_mps = 0.7;
    double speed_max_mps = 3.5;
    std::uint64_t seed = 1;
    int n_contacts = 50;
    std::int64_t start_epoch = 1750000000;
    std::string region = "sim";

    void validate() const;
    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
};

using Population = std::map<std::string, std::vector<GpsPoint>>;

Population generate_population(const SimConfig& cfg, const GridConfig& grid);

// Deterministic carrier choice: the first n_carriers user ids.
std::vector<std::string> carrier_ids(const SimConfig& cfg);

struct ContactSeed {
    std::string user;
    std::string carrier;
    std::size_t step = 0;
    std::int64_t t = 0;
    double lat = 0.0;
    double lon = 0.0;
};

// Copies carrier positions into non-carrier traces at random steps,
// guaranteeing same-cell contacts; returns the ground-truth ledger.
std::vector<ContactSeed> seed_contacts(Population& traces,
                                       const std::vector<std::string>& carriers, int n_contacts,
                                       RandomSource& rng);

// Plaintext ground truth, same quantization and expansion rule as the
// client but none of the crypto path.
struct OracleResult {
    std::map<std::string, std::vector<PointInterval>> matched_raw;  // sorted per user
    std::map<std::string, std::size_t> expanded_matches;
    std::map<std::string, std::size_t> raw_counts;
};

OracleResult oracle_contacts(const Population& traces, const std::vector<std::string>& carriers,
                             const GridConfig& grid, bool expand_spatial = true);

struct EndToEndOptions {
    GridConfig grid{0.0005, 300, "sim", 0};
    std::string group_name = "modp2048";
    enum class ModePolicy { alternate, ordered_only, shuffled_only };
    ModePolicy mode_policy = ModePolicy::alternate;
    unsigned workers = 2;         // concurrent client checks
    unsigned crypto_threads = 1;  // per-operation exponentiation threads
    Transcript* transcript = nullptr;
    std::string server_data_dir;
    std::string server_log_path;
    bool use_http = false;
    // Checked between users; return true to stop early (partial report).
    std::function<bool()> cancelled;
};

struct EndToEndResult {
    nlohmann::json report;  // deterministic; no wall-clock content
    bool all_match = true;
    std::size_t users_total = 0;
    std::size_t users_checked = 0;
    std::size_t mismatches = 0;
    double elapsed_sec = 0.0;  // reported separately, never in `report`
};

// Uploads carriers, runs every non-carrier's exposure check against an
// in-process (or HTTP) server, and diffs each result against the oracle.
EndToEndResult end_to_end_check(const SimConfig& cfg, const EndToEndOptions& opts);

// Writes scenario.json, carriers.json, contacts.json and one CSV trace per
// user under dir; returns a small summary.
nlohmann::json write_population(const std::string& dir, const SimConfig& cfg,
                                const GridConfig& grid);

struct AttackReport {
    std::uint64_t enumerated_cells = 0;
    std::size_t flatfile_size = 0;
    std::size_t recovered = 0;
    double fraction = 0.0;

    nlohmann::json to_json() const;
};

// The flat-file weakness, demonstrated: enumerate every point interval in
// box x window, hash each, intersect with the published file. Refuses
// regions larger than max_cells with a cost estimate.
AttackReport flatfile_attack(const FlatfileSet& flatfile, const GridConfig& grid, double lat_min,
                             double lat_max, double lon_min, double lon_max, std::int64_t t_from,
                             std::int64_t t_to, std::uint64_t max_cells);

}  // namespace cps
