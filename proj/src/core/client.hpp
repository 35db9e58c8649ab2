#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "core/grid.hpp"
#include "core/psi.hpp"
#include "core/redaction.hpp"
#include "core/transport.hpp"

namespace cps {

enum class RiskLevel { none, low, medium, high };

const char* risk_level_string(RiskLevel level);

// Monotone step thresholds on the match count. The paper leaves risk
// scoring open; these are configurable defaults.
struct RiskThresholds {
    std::size_t low = 1;
    std::size_t medium = 3;
    std::size_t high = 10;

    void validate() const;  // must be strictly increasing, low >= 1
};

RiskLevel assess_risk(std::size_t match_count, const RiskThresholds& thresholds);

struct ClientConfig {
    std::string region;
    GridConfig grid;  // pinned; must match the server's /params exactly
    std::string group_name = "modp2048";
    PsiMode mode = PsiMode::ordered;
    RiskThresholds thresholds;
    std::int64_t collection_period_sec = 300;  // device sampling cadence
    std::string client_key_id = "cli";
    bool expand_spatial = true;  // 9-cell stencil; off only for experiments
    unsigned crypto_threads = 1;

    void validate() const;
};

// Cell-resolution box where a point of contact happened (ordered mode).
struct PointOfContact {
    double lat_min = 0.0, lat_max = 0.0;
    double lon_min = 0.0, lon_max = 0.0;
    std::int64_t t_start = 0, t_end = 0;
};

struct RiskReport {
    std::size_t match_count = 0;
    RiskLevel level = RiskLevel::none;
    std::optional<std::vector<PointOfContact>> points_of_contact;
};

nlohmann::json risk_report_to_json(const RiskReport& report);

// Full result of one exposure check; the RiskReport is the user-facing
// slice, the rest feeds tests and the simulation oracle.
struct ExposureOutcome {
    RiskReport report;
    std::vector<PointInterval> raw_intervals;  // distinct, chronological (U)
    std::vector<PointInterval> matched_raw;    // subset of raw_intervals
    std::size_t sent_count = 0;                // |expanded client set|
    std::size_t matched_expanded = 0;
    std::uint64_t epoch_id = 0;
};

// CSV rows: user_id,lat,lon,epoch_seconds. Optional header. Errors name
// the offending 1-based line.
std::vector<GpsPoint> parse_trace_csv(std::istream& in, const std::string& name);
std::vector<GpsPoint> load_trace_file(const std::string& path);

using FlatfileSet = std::unordered_set<HashedInterval, HashedIntervalHasher>;

FlatfileSet parse_flatfile(const std::string& text);

// The client pipeline: redact -> quantize -> dedupe -> expand -> hash ->
// blind with a fresh key -> PSI exchange -> map matches back to raw
// intervals. Raw points and unblinded digests never reach the transport.
ExposureOutcome run_exposure_check(std::span<const GpsPoint> trace,
                                   std::span<const RedactionZone> zones, const ClientConfig& cfg,
                                   ServerTransport& transport, RandomSource& rng);

// Intermediary flat-file mode: same pipeline, local membership check.
ExposureOutcome check_against_flatfile(std::span<const GpsPoint> trace,
                                       std::span<const RedactionZone> zones,
                                       const ClientConfig& cfg, const FlatfileSet& flatfile);

struct UploadSummary {
    std::uint64_t accepted = 0;
    std::uint64_t skipped_stale = 0;
    std::size_t distinct_intervals = 0;
};

// Diagnosed-carrier path: redact, quantize, dedupe, hash, then upload
// digests plus the coarse heatmap stream (coarsened on-device).
UploadSummary run_carrier_upload(std::span<const GpsPoint> trace,
                                 std::span<const RedactionZone> zones, const ClientConfig& cfg,
                                 const std::string& token, int coarse_factor_space,
                                 int coarse_factor_time, ServerTransport& transport);

}  // namespace cps
