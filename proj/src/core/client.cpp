#include "core/client.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <unordered_map>

#include "core/errors.hpp"
#include "core/heatmap.hpp"

namespace cps {

using nlohmann::json;

const char* risk_level_string(RiskLevel level) {
    switch (level) {
        case RiskLevel::none: return "none";
        case RiskLevel::low: return "low";
        case RiskLevel::medium: return "medium";
        case RiskLevel::high: return "high";
    }
    return "none";
}

void RiskThresholds::validate() const {
    if (low < 1 || low >= medium || medium >= high)
        throw Error(ErrorCode::invalid_argument, "risk thresholds must be strictly increasing");
}

RiskLevel assess_risk(std::size_t match_count, const RiskThresholds& thresholds) {
    thresholds.validate();
    if (match_count >= thresholds.high) return RiskLevel::high;
    if (match_count >= thresholds.medium) return RiskLevel::medium;
    if (match_count >= thresholds.low) return RiskLevel::low;
    return RiskLevel::none;
}

void ClientConfig::validate() const {
    grid.validate();
    thresholds.validate();
    GroupParams::by_name(group_name);
    if (collection_period_sec <= 0)
        throw Error(ErrorCode::invalid_argument, "collection_period_sec must be positive");
    if (client_key_id.empty())
        throw Error(ErrorCode::invalid_argument, "client_key_id must not be empty");
}

json risk_report_to_json(const RiskReport& report) {
    json j{{"match_count", report.match_count}, {"level", risk_level_string(report.level)}};
    if (report.points_of_contact) {
        json pocs = json::array();
        for (const PointOfContact& p : *report.points_of_contact) {
            pocs.push_back({{"lat_min", p.lat_min},
                            {"lat_max", p.lat_max},
                            {"lon_min", p.lon_min},
                            {"lon_max", p.lon_max},
                            {"t_start", p.t_start},
                            {"t_end", p.t_end}});
        }
        j["points_of_contact"] = std::move(pocs);
    }
    return j;
}

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double_field(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(line) + ": bad " + what + " value '" + s + "'");
    }
}

std::int64_t parse_int_field(const std::string& s, std::size_t line, const char* what) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(line) + ": bad " + what + " value '" + s + "'");
    return v;
}

}  // namespace

std::vector<GpsPoint> parse_trace_csv(std::istream& in, const std::string& name) {
    std::vector<GpsPoint> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string trimmed = strip(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        if (lineno == 1 && trimmed.rfind("user_id", 0) == 0) continue;  // header

        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = trimmed.find(',', start);
            fields.push_back(strip(trimmed.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4)
            throw Error(ErrorCode::parse_error, name + ": line " + std::to_string(lineno) +
                                                    ": expected user_id,lat,lon,epoch_seconds");
        GpsPoint p;
        p.lat = parse_double_field(fields[1], lineno, "latitude");
        p.lon = parse_double_field(fields[2], lineno, "longitude");
        p.t = parse_int_field(fields[3], lineno, "timestamp");
        try {
            validate_point(p);
        } catch (const Error& e) {
            throw Error(e.code(), name + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        points.push_back(p);
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const GpsPoint& a, const GpsPoint& b) { return a.t < b.t; });
    return points;
}

std::vector<GpsPoint> load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open trace file: " + path);
    return parse_trace_csv(in, path);
}

FlatfileSet parse_flatfile(const std::string& text) {
    FlatfileSet set;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++lineno;
        const std::string line = strip(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        try {
            set.insert(HashedInterval::from_hex(line));
        } catch (const Error&) {
            throw Error(ErrorCode::parse_error,
                        "flat file line " + std::to_string(lineno) + ": not a digest");
        }
    }
    return set;
}

namespace {

// Distinct raw intervals (U) in order of first occurrence, and the
// deduplicated expanded list (E) with the U-indices each element covers.
struct ClientSets {
    std::vector<PointInterval> raw;                    // U
    std::vector<PointInterval> expanded;               // E, insertion order
    std::vector<std::vector<std::size_t>> origins;     // E index -> U indices
};

ClientSets build_client_sets(std::span<const GpsPoint> points, const ClientConfig& cfg) {
    ClientSets sets;
    std::unordered_map<PointInterval, std::size_t, PointIntervalHasher> seen_raw;
    std::unordered_map<PointInterval, std::size_t, PointIntervalHasher> seen_expanded;
    for (const GpsPoint& p : points) {
        const PointInterval pi = quantize(p, cfg.grid);
        if (seen_raw.contains(pi)) continue;
        seen_raw.emplace(pi, sets.raw.size());
        sets.raw.push_back(pi);
    }
    const std::int64_t k = cfg.grid.temporal_k;
    for (std::size_t ui = 0; ui < sets.raw.size(); ++ui) {
        const PointInterval& u = sets.raw[ui];
        std::vector<PointInterval> stencil;
        if (cfg.expand_spatial) {
            stencil = neighbors_spatial(u, cfg.grid);
        } else {
            stencil = {u};
        }
        for (const PointInterval& nb : stencil) {
            for (std::int64_t dt = -k; dt <= k; ++dt) {
                const std::int64_t t = nb.t_idx + dt;
                if (t < 0) continue;
                const PointInterval e{nb.cell_x, nb.cell_y, t};
                auto [it, inserted] = seen_expanded.emplace(e, sets.expanded.size());
                if (inserted) {
                    sets.expanded.push_back(e);
                    sets.origins.push_back({ui});
                } else {
                    sets.origins[it->second].push_back(ui);
                }
            }
        }
    }
    return sets;
}

PointOfContact cell_box(const PointInterval& pi, const GridConfig& grid) {
    PointOfContact poc;
    poc.lat_min = pi.cell_y * grid.delta_deg - 90.0;
    poc.lat_max = poc.lat_min + grid.delta_deg;
    poc.lon_min = pi.cell_x * grid.delta_deg - 180.0;
    poc.lon_max = poc.lon_min + grid.delta_deg;
    poc.t_start = pi.t_idx * grid.tau_sec;
    poc.t_end = poc.t_start + grid.tau_sec;
    return poc;
}

// Resolve matched expanded indices to distinct raw intervals, in U order.
ExposureOutcome finish_ordered(const ClientSets& sets, const std::vector<std::size_t>& matched,
                               std::size_t matched_expanded, const ClientConfig& cfg) {
    std::vector<bool> raw_hit(sets.raw.size(), false);
    for (std::size_t ei : matched)
        for (std::size_t ui : sets.origins[ei]) raw_hit[ui] = true;

    ExposureOutcome out;
    out.raw_intervals = sets.raw;
    out.sent_count = sets.expanded.size();
    out.matched_expanded = matched_expanded;
    std::vector<PointOfContact> pocs;
    for (std::size_t ui = 0; ui < sets.raw.size(); ++ui) {
        if (!raw_hit[ui]) continue;
        out.matched_raw.push_back(sets.raw[ui]);
        pocs.push_back(cell_box(sets.raw[ui], cfg.grid));
    }
    out.report.match_count = out.matched_raw.size();
    out.report.level = assess_risk(out.report.match_count, cfg.thresholds);
    out.report.points_of_contact = std::move(pocs);
    return out;
}

}  // namespace

ExposureOutcome run_exposure_check(std::span<const GpsPoint> trace,
                                   std::span<const RedactionZone> zones, const ClientConfig& cfg,
                                   ServerTransport& transport, RandomSource& rng) {
    cfg.validate();
    const GroupParams& group = GroupParams::by_name(cfg.group_name);

    // Pin the shared grid: a silent mismatch would just never match.
    const ParamsInfo server_params = transport.fetch_params(cfg.region);
    if (server_params.delta_deg != cfg.grid.delta_deg ||
        server_params.tau_sec != cfg.grid.tau_sec ||
        server_params.temporal_k != cfg.grid.temporal_k || server_params.group != group.name ||
        server_params.byte_len != group.byte_len)
        throw Error(ErrorCode::config_mismatch,
                    "server grid/group parameters differ from the pinned client config");

    const RedactedTrace redacted = redact(trace, zones);
    const ClientSets sets = build_client_sets(redacted.points, cfg);

    std::vector<GroupElement> elems(sets.expanded.size());
    for (std::size_t i = 0; i < elems.size(); ++i)
        elems[i] = to_group(hash_interval(sets.expanded[i], cfg.grid), group);

    // Fresh blinding key per exchange; never persisted, dropped on return.
    const PrivateExponent a = keygen(group, rng);
    const std::vector<GroupElement> blinded = blind(elems, a, group, cfg.crypto_threads);

    PsiRequest req;
    req.mode = cfg.mode;
    req.client_key_id = cfg.client_key_id;
    req.elements_b64.reserve(blinded.size());
    for (const GroupElement& e : blinded) req.elements_b64.push_back(element_to_b64(e, group));

    const PsiResponse resp = transport.psi(cfg.region, req);
    if (resp.double_blinded_b64.size() != sets.expanded.size())
        throw Error(ErrorCode::internal_error, "server returned a wrong-sized double-blinded list");

    std::vector<GroupElement> double_blinded(resp.double_blinded_b64.size());
    for (std::size_t i = 0; i < double_blinded.size(); ++i)
        double_blinded[i] = element_from_b64(resp.double_blinded_b64[i], group);
    std::vector<GroupElement> carrier_blinded(resp.carrier_blinded_b64.size());
    for (std::size_t i = 0; i < carrier_blinded.size(); ++i)
        carrier_blinded[i] = element_from_b64(resp.carrier_blinded_b64[i], group);

    const MatchResult mr =
        client_intersect(double_blinded, carrier_blinded, a, cfg.mode, group, cfg.crypto_threads);

    ExposureOutcome out;
    if (cfg.mode == PsiMode::ordered) {
        out = finish_ordered(sets, mr.matched_indices, mr.match_count, cfg);
    } else {
        // Shuffled mode reveals only how many sent elements matched.
        out.raw_intervals = sets.raw;
        out.sent_count = sets.expanded.size();
        out.matched_expanded = mr.match_count;
        out.report.match_count = mr.match_count;
        out.report.level = assess_risk(mr.match_count, cfg.thresholds);
    }
    out.epoch_id = resp.epoch_id;
    return out;
}

ExposureOutcome check_against_flatfile(std::span<const GpsPoint> trace,
                                       std::span<const RedactionZone> zones,
                                       const ClientConfig& cfg, const FlatfileSet& flatfile) {
    cfg.validate();
    const RedactedTrace redacted = redact(trace, zones);
    const ClientSets sets = build_client_sets(redacted.points, cfg);
    std::vector<std::size_t> matched;
    for (std::size_t i = 0; i < sets.expanded.size(); ++i)
        if (flatfile.contains(hash_interval(sets.expanded[i], cfg.grid))) matched.push_back(i);
    return finish_ordered(sets, matched, matched.size(), cfg);
}

UploadSummary run_carrier_upload(std::span<const GpsPoint> trace,
                                 std::span<const RedactionZone> zones, const ClientConfig& cfg,
                                 const std::string& token, int coarse_factor_space,
                                 int coarse_factor_time, ServerTransport& transport) {
    cfg.validate();
    const RedactedTrace redacted = redact(trace, zones);

    std::vector<PointInterval> raw;
    std::unordered_map<PointInterval, std::size_t, PointIntervalHasher> seen;
    for (const GpsPoint& p : redacted.points) {
        const PointInterval pi = quantize(p, cfg.grid);
        if (seen.emplace(pi, raw.size()).second) raw.push_back(pi);
    }

    UploadRequest req;
    req.token = token;
    req.intervals.reserve(raw.size());
    std::map<CoarseKey, std::uint64_t> coarse;
    for (const PointInterval& pi : raw) {
        req.intervals.push_back(UploadItem{hash_interval(pi, cfg.grid), pi.t_idx});
        ++coarse[coarsen(pi, coarse_factor_space, coarse_factor_time)];
    }
    for (const auto& [key, count] : coarse)
        req.coarse_cells.push_back(CoarseUpload{key.x, key.y, key.day, count});

    const UploadResponse resp = transport.upload(cfg.region, req);
    return UploadSummary{resp.accepted, resp.skipped_stale, raw.size()};
}

}  // namespace cps
