#include "core/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <unordered_set>

#include "core/errors.hpp"
#include "core/http_server.hpp"
#include "core/server.hpp"
#include "core/threading.hpp"

namespace cps {

namespace fs = std::filesystem;
using nlohmann::json;

void SimConfig::validate() const {
    if (n_users < 0 || n_carriers < 0 || n_carriers > n_users)
        throw Error(ErrorCode::invalid_argument, "need 0 <= n_carriers <= n_users");
    if (!(lat_min < lat_max) || !(lon_min < lon_max))
        throw Error(ErrorCode::invalid_argument, "bounding box must be non-empty");
    if (lat_min < -90.0 || lat_max > 90.0 || lon_min < -180.0 || lon_max >= 180.0)
        throw Error(ErrorCode::invalid_argument, "bounding box outside coordinate domain");
    if (duration_days < 1 || step_sec <= 0)
        throw Error(ErrorCode::invalid_argument, "duration_days and step_sec must be positive");
    if (!(speed_min_mps > 0.0) || speed_max_mps < speed_min_mps)
        throw Error(ErrorCode::invalid_argument, "speed range invalid");
    if (n_contacts < 0) throw Error(ErrorCode::invalid_argument, "n_contacts must be >= 0");
    if (start_epoch < 0) throw Error(ErrorCode::invalid_argument, "start_epoch must be >= 0");
    if (region.empty()) throw Error(ErrorCode::invalid_argument, "region must not be empty");
}

json SimConfig::to_json() const {
    return json{{"n_users", n_users},
                {"n_carriers", n_carriers},
                {"lat_min", lat_min},
                {"lat_max", lat_max},
                {"lon_min", lon_min},
                {"lon_max", lon_max},
                {"duration_days", duration_days},
                {"step_sec", step_sec},
                {"speed_min_mps", speed_min_mps},
                {"speed_max_mps", speed_max_mps},
                {"seed", seed},
                {"n_contacts", n_contacts},
                {"start_epoch", start_epoch},
                {"region", region}};
}

SimConfig SimConfig::from_json(const json& j) {
    SimConfig cfg;
    try {
        cfg.n_users = j.value("n_users", cfg.n_users);
        cfg.n_carriers = j.value("n_carriers", cfg.n_carriers);
        cfg.lat_min = j.value("lat_min", cfg.lat_min);
        cfg.lat_max = j.value("lat_max", cfg.lat_max);
        cfg.lon_min = j.value("lon_min", cfg.lon_min);
        cfg.lon_max = j.value("lon_max", cfg.lon_max);
        cfg.duration_days = j.value("duration_days", cfg.duration_days);
        cfg.step_sec = j.value("step_sec", cfg.step_sec);
        cfg.speed_min_mps = j.value("speed_min_mps", cfg.speed_min_mps);
        cfg.speed_max_mps = j.value("speed_max_mps", cfg.speed_max_mps);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.n_contacts = j.value("n_contacts", cfg.n_contacts);
        cfg.start_epoch = j.value("start_epoch", cfg.start_epoch);
        cfg.region = j.value("region", cfg.region);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("scenario config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

std::string user_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%04d", i);
    return buf;
}

double unit_double(RandomSource& rng) {
    return static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
}

double pick(RandomSource& rng, double lo, double hi) {
    return lo + unit_double(rng) * (hi - lo);
}

// Random-waypoint walker. A quarter of the waypoints snap to cell edges so
// traces keep crossing cell boundaries, which is what adjacency expansion
// has to cope with.
struct Walker {
    const SimConfig& cfg;
    const GridConfig& grid;
    SeededRandom rng;
    double lat, lon, target_lat, target_lon, speed;
    double m_per_deg_lat, m_per_deg_lon;

    Walker(const SimConfig& c, const GridConfig& g, std::uint64_t seed)
        : cfg(c), grid(g), rng(seed) {
        const double mid_lat = 0.5 * (cfg.lat_min + cfg.lat_max);
        m_per_deg_lat = 111320.0;
        m_per_deg_lon = 111320.0 * std::cos(mid_lat * std::numbers::pi / 180.0);
        lat = pick(rng, cfg.lat_min, cfg.lat_max);
        lon = pick(rng, cfg.lon_min, cfg.lon_max);
        retarget();
    }

    double snap_edge(double v, double origin_offset, double lo, double hi) {
        const double snapped =
            std::round((v + origin_offset) / grid.delta_deg) * grid.delta_deg - origin_offset;
        return std::clamp(snapped, lo, hi);
    }

    void retarget() {
        target_lat = pick(rng, cfg.lat_min, cfg.lat_max);
        target_lon = pick(rng, cfg.lon_min, cfg.lon_max);
        if (unit_double(rng) < 0.25) {
            target_lat = snap_edge(target_lat, 90.0, cfg.lat_min, cfg.lat_max);
            target_lon = snap_edge(target_lon, 180.0, cfg.lon_min, cfg.lon_max);
        }
        speed = pick(rng, cfg.speed_min_mps, cfg.speed_max_mps);
    }

    void advance(double seconds) {
        double budget_m = speed * seconds;
        while (budget_m > 0.0) {
            const double dx = (target_lon - lon) * m_per_deg_lon;
            const double dy = (target_lat - lat) * m_per_deg_lat;
            const double dist = std::hypot(dx, dy);
            if (dist <= budget_m) {
                lat = target_lat;
                lon = target_lon;
                budget_m -= dist;
                retarget();
                if (dist == 0.0) break;  // degenerate target on top of us
            } else {
                const double f = budget_m / dist;
                lat += (target_lat - lat) * f;
                lon += (target_lon - lon) * f;
                budget_m = 0.0;
            }
        }
        lat = std::clamp(lat, cfg.lat_min, cfg.lat_max);
        lon = std::clamp(lon, cfg.lon_min, cfg.lon_max);
    }
};

}  // namespace

std::vector<std::string> carrier_ids(const SimConfig& cfg) {
    std::vector<std::string> out;
    out.reserve(cfg.n_carriers);
    for (int i = 0; i < cfg.n_carriers; ++i) out.push_back(user_name(i));
    return out;
}

Population generate_population(const SimConfig& cfg, const GridConfig& grid) {
    cfg.validate();
    grid.validate();
    Population traces;
    const std::int64_t steps =
        static_cast<std::int64_t>(cfg.duration_days) * 86400 / cfg.step_sec;
    for (int u = 0; u < cfg.n_users; ++u) {
        Walker w(cfg, grid, cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(u + 1));
        std::vector<GpsPoint> trace;
        trace.reserve(static_cast<std::size_t>(steps));
        for (std::int64_t i = 0; i < steps; ++i) {
            trace.push_back(GpsPoint{w.lat, w.lon, cfg.start_epoch + i * cfg.step_sec});
            w.advance(static_cast<double>(cfg.step_sec));
        }
        traces[user_name(u)] = std::move(trace);
    }
    return traces;
}

std::vector<ContactSeed> seed_contacts(Population& traces,
                                       const std::vector<std::string>& carriers, int n_contacts,
                                       RandomSource& rng) {
    std::vector<ContactSeed> ledger;
    if (n_contacts == 0 || carriers.empty()) return ledger;

    std::vector<std::string> others;
    for (const auto& [name, trace] : traces)
        if (std::find(carriers.begin(), carriers.end(), name) == carriers.end())
            others.push_back(name);
    if (others.empty()) return ledger;

    std::set<std::pair<std::string, std::size_t>> used;  // one seed per (user, step)
    while (static_cast<int>(ledger.size()) < n_contacts) {
        const std::string& user = others[rng.below(others.size())];
        const std::string& carrier = carriers[rng.below(carriers.size())];
        std::vector<GpsPoint>& user_trace = traces[user];
        const std::vector<GpsPoint>& carrier_trace = traces.at(carrier);
        const std::size_t n = std::min(user_trace.size(), carrier_trace.size());
        if (n == 0) break;
        const std::size_t step = rng.below(n);
        if (!used.emplace(user, step).second) continue;
        user_trace[step].lat = carrier_trace[step].lat;
        user_trace[step].lon = carrier_trace[step].lon;
        ledger.push_back(ContactSeed{user, carrier, step, user_trace[step].t,
                                     user_trace[step].lat, user_trace[step].lon});
    }
    return ledger;
}

OracleResult oracle_contacts(const Population& traces, const std::vector<std::string>& carriers,
                             const GridConfig& grid, bool expand_spatial) {
    OracleResult result;
    std::unordered_set<PointInterval, PointIntervalHasher> carrier_set;
    for (const std::string& c : carriers) {
        auto it = traces.find(c);
        if (it == traces.end()) throw Error(ErrorCode::invalid_argument, "unknown carrier: " + c);
        for (const GpsPoint& p : it->second) carrier_set.insert(quantize(p, grid));
    }

    const std::int64_t k = grid.temporal_k;
    for (const auto& [name, trace] : traces) {
        if (std::find(carriers.begin(), carriers.end(), name) != carriers.end()) continue;

        std::vector<PointInterval> raw;
        std::unordered_set<PointInterval, PointIntervalHasher> seen;
        for (const GpsPoint& p : trace) {
            const PointInterval pi = quantize(p, grid);
            if (seen.insert(pi).second) raw.push_back(pi);
        }
        result.raw_counts[name] = raw.size();

        std::vector<PointInterval> matched;
        std::unordered_set<PointInterval, PointIntervalHasher> expanded_all;
        for (const PointInterval& u : raw) {
            bool hit = false;
            std::vector<PointInterval> stencil =
                expand_spatial ? neighbors_spatial(u, grid) : std::vector<PointInterval>{u};
            for (const PointInterval& nb : stencil) {
                for (std::int64_t dt = -k; dt <= k; ++dt) {
                    const std::int64_t t = nb.t_idx + dt;
                    if (t < 0) continue;
                    const PointInterval e{nb.cell_x, nb.cell_y, t};
                    expanded_all.insert(e);
                    if (carrier_set.contains(e)) hit = true;
                }
            }
            if (hit) matched.push_back(u);
        }
        std::sort(matched.begin(), matched.end());
        result.matched_raw[name] = std::move(matched);

        std::size_t expanded_hits = 0;
        for (const PointInterval& e : expanded_all)
            if (carrier_set.contains(e)) ++expanded_hits;
        result.expanded_matches[name] = expanded_hits;
    }
    return result;
}

EndToEndResult end_to_end_check(const SimConfig& cfg, const EndToEndOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();

    GridConfig grid = opts.grid;
    grid.region = cfg.region;
    grid.validate();

    Population traces = generate_population(cfg, grid);
    const std::vector<std::string> carriers = carrier_ids(cfg);
    SeededRandom contact_rng(cfg.seed ^ 0xC0FFEEULL);
    const std::vector<ContactSeed> ledger =
        seed_contacts(traces, carriers, cfg.n_contacts, contact_rng);

    ServerOptions server_opts;
    server_opts.grid = grid;
    server_opts.regions = {cfg.region};
    server_opts.group_name = opts.group_name;
    server_opts.token = "sim-upload-token";
    server_opts.crypto_threads = opts.crypto_threads;
    server_opts.data_dir = opts.server_data_dir;
    server_opts.log_path = opts.server_log_path;
    const std::int64_t sim_now =
        cfg.start_epoch + static_cast<std::int64_t>(cfg.duration_days) * 86400 + 60;
    server_opts.now_fn = [sim_now] { return sim_now; };
    CarrierService service(server_opts);

    HttpServer http(service);
    std::string base_url;
    if (opts.use_http) {
        const int port = http.start_background();
        base_url = "http://127.0.0.1:" + std::to_string(port);
    }
    auto make_transport = [&]() -> std::unique_ptr<ServerTransport> {
        if (opts.use_http)
            return std::make_unique<HttpTransport>(base_url, opts.transcript);
        return std::make_unique<InProcessTransport>(service, opts.transcript);
    };

    ClientConfig base_client;
    base_client.region = cfg.region;
    base_client.grid = grid;
    base_client.group_name = opts.group_name;
    base_client.crypto_threads = opts.crypto_threads;

    // Diagnosed carriers share their transformed points.
    {
        auto transport = make_transport();
        for (const std::string& c : carriers) {
            ClientConfig up = base_client;
            up.client_key_id = c;
            run_carrier_upload(traces.at(c), {}, up, server_opts.token,
                               server_opts.heatmap.factor_space, server_opts.heatmap.factor_time,
                               *transport);
        }
    }

    const OracleResult oracle = oracle_contacts(traces, carriers, grid, true);

    std::vector<std::string> subjects;
    for (const auto& [name, trace] : traces)
        if (std::find(carriers.begin(), carriers.end(), name) == carriers.end())
            subjects.push_back(name);

    struct UserRow {
        bool checked = false;
        bool ok = false;
        PsiMode mode = PsiMode::ordered;
        std::size_t match_count = 0;
        std::size_t matched_expanded = 0;
        RiskLevel level = RiskLevel::none;
        std::string detail;
    };
    std::vector<UserRow> rows(subjects.size());
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        auto transport = make_transport();
        SecureRandom key_rng;
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) return;
            if (opts.cancelled && opts.cancelled()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= subjects.size()) return;
            const std::string& name = subjects[i];
            UserRow& row = rows[i];
            row.mode = opts.mode_policy == EndToEndOptions::ModePolicy::shuffled_only
                           ? PsiMode::shuffled
                       : opts.mode_policy == EndToEndOptions::ModePolicy::ordered_only
                           ? PsiMode::ordered
                       : (i % 2 == 0 ? PsiMode::ordered : PsiMode::shuffled);
            ClientConfig cc = base_client;
            cc.mode = row.mode;
            cc.client_key_id = name;
            try {
                const ExposureOutcome outcome =
                    run_exposure_check(traces.at(name), {}, cc, *transport, key_rng);
                row.checked = true;
                row.match_count = outcome.report.match_count;
                row.matched_expanded = outcome.matched_expanded;
                row.level = outcome.report.level;
                if (row.mode == PsiMode::ordered) {
                    std::vector<PointInterval> got = outcome.matched_raw;
                    std::sort(got.begin(), got.end());
                    row.ok = got == oracle.matched_raw.at(name);
                    if (!row.ok) row.detail = "matched raw-interval set differs from oracle";
                } else {
                    row.ok = outcome.matched_expanded == oracle.expanded_matches.at(name);
                    if (!row.ok)
                        row.detail = "matched count " + std::to_string(outcome.matched_expanded) +
                                     " != oracle " +
                                     std::to_string(oracle.expanded_matches.at(name));
                }
            } catch (const std::exception& e) {
                row.checked = true;
                row.ok = false;
                row.detail = e.what();
            }
        }
    };

    const unsigned workers = std::max(1u, opts.workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    stop = true;
    http.stop();

    EndToEndResult result;
    result.users_total = subjects.size();

    json results = json::object();
    std::size_t ordered_checked = 0, shuffled_checked = 0, total_matches = 0;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const UserRow& row = rows[i];
        if (!row.checked) continue;
        ++result.users_checked;
        if (row.mode == PsiMode::ordered)
            ++ordered_checked;
        else
            ++shuffled_checked;
        if (!row.ok) ++result.mismatches;
        total_matches += row.match_count;
        json entry{{"mode", psi_mode_string(row.mode)},
                   {"match_count", row.match_count},
                   {"matched_expanded", row.matched_expanded},
                   {"level", risk_level_string(row.level)},
                   {"ok", row.ok}};
        if (!row.detail.empty()) entry["detail"] = row.detail;
        results[subjects[i]] = std::move(entry);
    }
    result.all_match = result.mismatches == 0;

    result.report = json{{"scenario", cfg.to_json()},
                         {"grid",
                          {{"delta_deg", grid.delta_deg},
                           {"tau_sec", grid.tau_sec},
                           {"temporal_k", grid.temporal_k},
                           {"region", grid.region}}},
                         {"group", opts.group_name},
                         {"seeded_contacts", ledger.size()},
                         {"carrier_store_size", service.store_size(cfg.region)},
                         {"users_total", result.users_total},
                         {"users_checked", result.users_checked},
                         {"ordered_checked", ordered_checked},
                         {"shuffled_checked", shuffled_checked},
                         {"mismatches", result.mismatches},
                         {"total_match_count", total_matches},
                         {"results", std::move(results)}};
    result.elapsed_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

nlohmann::json write_population(const std::string& dir, const SimConfig& cfg,
                                const GridConfig& grid_in) {
    cfg.validate();
    GridConfig grid = grid_in;
    grid.region = cfg.region;
    grid.validate();

    Population traces = generate_population(cfg, grid);
    const std::vector<std::string> carriers = carrier_ids(cfg);
    SeededRandom contact_rng(cfg.seed ^ 0xC0FFEEULL);
    const std::vector<ContactSeed> ledger =
        seed_contacts(traces, carriers, cfg.n_contacts, contact_rng);

    fs::create_directories(fs::path(dir) / "traces");
    auto write_file = [](const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
        out << content;
    };

    write_file(fs::path(dir) / "scenario.json", cfg.to_json().dump(2) + "\n");
    write_file(fs::path(dir) / "carriers.json", json(carriers).dump(2) + "\n");
    json contacts = json::array();
    for (const ContactSeed& c : ledger)
        contacts.push_back(json{{"user", c.user},
                                {"carrier", c.carrier},
                                {"step", c.step},
                                {"t", c.t},
                                {"lat", c.lat},
                                {"lon", c.lon}});
    write_file(fs::path(dir) / "contacts.json", contacts.dump(2) + "\n");

    char buf[256];
    for (const auto& [name, trace] : traces) {
        std::string csv = "user_id,lat,lon,epoch_seconds\n";
        for (const GpsPoint& p : trace) {
            std::snprintf(buf, sizeof(buf), "%s,%.9f,%.9f,%lld\n", name.c_str(), p.lat, p.lon,
                          static_cast<long long>(p.t));
            csv += buf;
        }
        write_file(fs::path(dir) / "traces" / (name + ".csv"), csv);
    }

    return json{{"dir", dir},
                {"users", traces.size()},
                {"carriers", carriers.size()},
                {"seeded_contacts", ledger.size()},
                {"steps_per_user",
                 static_cast<std::int64_t>(cfg.duration_days) * 86400 / cfg.step_sec}};
}

json AttackReport::to_json() const {
    return json{{"enumerated_cells", enumerated_cells},
                {"flatfile_size", flatfile_size},
                {"recovered", recovered},
                {"fraction", fraction}};
}

AttackReport flatfile_attack(const FlatfileSet& flatfile, const GridConfig& grid, double lat_min,
                             double lat_max, double lon_min, double lon_max, std::int64_t t_from,
                             std::int64_t t_to, std::uint64_t max_cells) {
    grid.validate();
    if (!(lat_min <= lat_max) || !(lon_min <= lon_max) || t_from > t_to)
        throw Error(ErrorCode::invalid_argument, "attack box is empty");
    validate_point(GpsPoint{lat_min, lon_min, std::max<std::int64_t>(t_from, 0)});
    validate_point(GpsPoint{lat_max, lon_max, std::max<std::int64_t>(t_from, 0)});
    if (t_from < 0) t_from = 0;

    const PointInterval lo = quantize(GpsPoint{lat_min, lon_min, t_from}, grid);
    const PointInterval hi = quantize(GpsPoint{lat_max, lon_max, t_to}, grid);
    const std::uint64_t nx = static_cast<std::uint64_t>(hi.cell_x - lo.cell_x + 1);
    const std::uint64_t ny = static_cast<std::uint64_t>(hi.cell_y - lo.cell_y + 1);
    const std::uint64_t nt = static_cast<std::uint64_t>(hi.t_idx - lo.t_idx + 1);
    AttackReport report;
    report.enumerated_cells = nx * ny * nt;
    report.flatfile_size = flatfile.size();
    if (report.enumerated_cells > max_cells)
        throw Error(ErrorCode::refused,
                    "enumeration would cover " + std::to_string(report.enumerated_cells) +
                        " point intervals, over the budget of " + std::to_string(max_cells) +
                        "; narrow the box or raise --max-cells");

    for (std::int32_t x = lo.cell_x; x <= hi.cell_x; ++x)
        for (std::int32_t y = lo.cell_y; y <= hi.cell_y; ++y)
            for (std::int64_t t = lo.t_idx; t <= hi.t_idx; ++t)
                if (flatfile.contains(hash_interval(PointInterval{x, y, t}, grid)))
                    ++report.recovered;

    report.fraction = flatfile.empty()
                          ? 0.0
                          : static_cast<double>(report.recovered) /
                                static_cast<double>(flatfile.size());
    return report;
}

}  // namespace cps
