#include "contactpsi/contactpsi.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "core/client.hpp"
#include "core/errors.hpp"
#include "core/grid.hpp"
#include "core/http_server.hpp"
#include "core/redaction.hpp"
#include "core/server.hpp"
#include "core/sim.hpp"
#include "core/threading.hpp"
#include "core/transport.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

cps_status status_from(cps::ErrorCode code) {
    using cps::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument: return CPS_ERR_INVALID_ARGUMENT;
        case ErrorCode::parse_error: return CPS_ERR_PARSE;
        case ErrorCode::out_of_range: return CPS_ERR_OUT_OF_RANGE;
        case ErrorCode::bad_token: return CPS_ERR_BAD_TOKEN;
        case ErrorCode::unknown_region: return CPS_ERR_UNKNOWN_REGION;
        case ErrorCode::limit_oversize: return CPS_ERR_LIMIT_OVERSIZE;
        case ErrorCode::quota_exhausted: return CPS_ERR_QUOTA_EXHAUSTED;
        case ErrorCode::config_mismatch: return CPS_ERR_CONFIG_MISMATCH;
        case ErrorCode::network_error: return CPS_ERR_NETWORK;
        case ErrorCode::io_error: return CPS_ERR_IO;
        case ErrorCode::refused: return CPS_ERR_REFUSED;
        case ErrorCode::internal_error: return CPS_ERR_INTERNAL;
    }
    return CPS_ERR_INTERNAL;
}

template <typename Fn>
cps_status guarded(Fn&& fn) {
    try {
        fn();
        return CPS_OK;
    } catch (const cps::Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CPS_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return CPS_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc{};
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

json parse_config(const char* text, const char* what) {
    if (!text) throw cps::Error(cps::ErrorCode::invalid_argument, std::string(what) + " is null");
    const std::string s(text);
    if (s.empty() || s.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    return cps::parse_json(s, what);
}

unsigned threads_option(const json& cfg, const char* key) {
    const unsigned v = cfg.value(key, 0u);
    return v == 0 ? cps::default_threads() : v;
}

cps::GridConfig grid_from_json(const json& j, const std::string& region) {
    cps::GridConfig grid;
    grid.delta_deg = j.value("delta_deg", grid.delta_deg);
    grid.tau_sec = j.value("tau_sec", grid.tau_sec);
    grid.temporal_k = j.value("temporal_k", grid.temporal_k);
    grid.region = region;
    grid.validate();
    return grid;
}

std::string require_string(const json& cfg, const char* key) {
    if (!cfg.contains(key) || !cfg.at(key).is_string() ||
        cfg.at(key).get<std::string>().empty())
        throw cps::Error(cps::ErrorCode::invalid_argument,
                         std::string("config requires \"") + key + "\"");
    return cfg.at(key).get<std::string>();
}

// Shared client-side setup: transport, pinned grid, zones, trace.
struct ClientContext {
    std::string region;
    std::unique_ptr<cps::HttpTransport> transport;  // null for offline workflows
    cps::ClientConfig client;
    std::vector<cps::RedactionZone> zones;
    std::vector<cps::GpsPoint> trace;
};

cps::RiskThresholds thresholds_from(const json& cfg) {
    cps::RiskThresholds t;
    if (cfg.contains("thresholds")) {
        const json& j = cfg.at("thresholds");
        t.low = j.value("low", t.low);
        t.medium = j.value("medium", t.medium);
        t.high = j.value("high", t.high);
    }
    t.validate();
    return t;
}

ClientContext make_client_context(const json& cfg, bool networked, bool needs_trace) {
    ClientContext ctx;
    ctx.region = require_string(cfg, "region");

    if (networked) {
        ctx.transport = std::make_unique<cps::HttpTransport>(require_string(cfg, "server_url"));
    }

    if (cfg.contains("grid")) {
        ctx.client.grid = grid_from_json(cfg.at("grid"), ctx.region);
        if (cfg.contains("group")) ctx.client.group_name = cfg.at("group").get<std::string>();
    } else if (networked) {
        // No pinned grid yet: adopt the server's shared parameters.
        const cps::ParamsInfo params = ctx.transport->fetch_params(ctx.region);
        ctx.client.grid.delta_deg = params.delta_deg;
        ctx.client.grid.tau_sec = params.tau_sec;
        ctx.client.grid.temporal_k = params.temporal_k;
        ctx.client.grid.region = ctx.region;
        ctx.client.group_name = params.group;
    } else {
        ctx.client.grid.region = ctx.region;  // library defaults
    }
    ctx.client.grid.validate();
    ctx.client.region = ctx.region;
    ctx.client.mode = cps::psi_mode_from_string(cfg.value("mode", std::string("ordered")));
    ctx.client.thresholds = thresholds_from(cfg);
    ctx.client.client_key_id = cfg.value("client_key_id", std::string("cli"));
    ctx.client.crypto_threads = threads_option(cfg, "crypto_threads");

    if (cfg.contains("zones")) ctx.zones = cps::load_zones_file(cfg.at("zones").get<std::string>());

    if (needs_trace) ctx.trace = cps::load_trace_file(require_string(cfg, "trace"));

    if (cfg.value("auto_home", false)) {
        int start_h = 22, end_h = 6;
        double radius = 200.0;
        std::int64_t offset = 0;
        if (cfg.contains("night")) {
            const json& n = cfg.at("night");
            start_h = n.value("start_h", start_h);
            end_h = n.value("end_h", end_h);
            radius = n.value("radius_m", radius);
            offset = n.value("utc_offset_sec", offset);
        }
        if (auto home = cps::infer_home_zone(ctx.trace, start_h, end_h, radius, offset))
            ctx.zones.push_back(*home);
    }
    return ctx;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cps::Error(cps::ErrorCode::io_error, "cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

struct cps_grid {
    cps::GridConfig config;
};

struct cps_server {
    std::unique_ptr<cps::CarrierService> service;
    std::unique_ptr<cps::HttpServer> http;
};

extern "C" {

const char* cps_version(void) { return "0.1.0"; }

const char* cps_status_name(cps_status status) {
    switch (status) {
        case CPS_OK: return "ok";
        case CPS_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case CPS_ERR_PARSE: return "parse_error";
        case CPS_ERR_OUT_OF_RANGE: return "out_of_range";
        case CPS_ERR_BAD_TOKEN: return "bad_token";
        case CPS_ERR_UNKNOWN_REGION: return "unknown_region";
        case CPS_ERR_LIMIT_OVERSIZE: return "limit_oversize";
        case CPS_ERR_QUOTA_EXHAUSTED: return "quota_exhausted";
        case CPS_ERR_CONFIG_MISMATCH: return "config_mismatch";
        case CPS_ERR_NETWORK: return "network_error";
        case CPS_ERR_IO: return "io_error";
        case CPS_ERR_REFUSED: return "refused";
        case CPS_ERR_INTERNAL: return "internal_error";
    }
    return "internal_error";
}

const char* cps_last_error(void) { return g_last_error.c_str(); }

void cps_string_free(char* s) { std::free(s); }

cps_status cps_grid_create(double delta_deg, int64_t tau_sec, const char* region,
                           uint32_t temporal_k, cps_grid** out) {
    return guarded([&] {
        if (!out || !region)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        cps::GridConfig cfg{delta_deg, tau_sec, region, temporal_k};
        cfg.validate();
        *out = new cps_grid{std::move(cfg)};
    });
}

void cps_grid_destroy(cps_grid* grid) { delete grid; }

cps_status cps_grid_quantize(const cps_grid* grid, double lat, double lon, int64_t t,
                             int32_t* cell_x, int32_t* cell_y, int64_t* t_idx) {
    return guarded([&] {
        if (!grid || !cell_x || !cell_y || !t_idx)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        const cps::PointInterval pi = cps::quantize(cps::GpsPoint{lat, lon, t}, grid->config);
        *cell_x = pi.cell_x;
        *cell_y = pi.cell_y;
        *t_idx = pi.t_idx;
    });
}

cps_status cps_grid_canonical_bytes(const cps_grid* grid, int32_t cell_x, int32_t cell_y,
                                    int64_t t_idx, uint8_t* buf, size_t cap, size_t* len) {
    return guarded([&] {
        if (!grid || !buf || !len)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        const std::vector<std::uint8_t> bytes =
            cps::canonical_bytes(cps::PointInterval{cell_x, cell_y, t_idx}, grid->config);
        if (bytes.size() > cap)
            throw cps::Error(cps::ErrorCode::invalid_argument, "buffer too small");
        std::memcpy(buf, bytes.data(), bytes.size());
        *len = bytes.size();
    });
}

cps_status cps_grid_hash_interval(const cps_grid* grid, int32_t cell_x, int32_t cell_y,
                                  int64_t t_idx, uint8_t digest[32]) {
    return guarded([&] {
        if (!grid || !digest)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        const cps::HashedInterval h =
            cps::hash_interval(cps::PointInterval{cell_x, cell_y, t_idx}, grid->config);
        std::memcpy(digest, h.digest.data(), h.digest.size());
    });
}

cps_status cps_server_create(const char* config_json, cps_server** out) {
    return guarded([&] {
        if (!out) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "server config");
        cps::ServerOptions opts;
        if (!cfg.contains("regions") || !cfg.at("regions").is_array() ||
            cfg.at("regions").empty())
            throw cps::Error(cps::ErrorCode::invalid_argument,
                             "server config requires a non-empty \"regions\" array");
        opts.regions = cfg.at("regions").get<std::vector<std::string>>();
        opts.grid = grid_from_json(cfg.value("grid", json::object()), opts.regions.front());
        opts.group_name = cfg.value("group", opts.group_name);
        opts.token = cfg.value("token", opts.token);
        opts.retention.d_days = cfg.value("d_days", opts.retention.d_days);
        opts.limits.max_elems_per_exchange =
            cfg.value("max_elems_per_exchange", opts.limits.max_elems_per_exchange);
        opts.limits.max_queries_per_day =
            cfg.value("max_queries_per_day", opts.limits.max_queries_per_day);
        if (cfg.contains("heatmap")) {
            const json& h = cfg.at("heatmap");
            opts.heatmap.factor_space = h.value("factor_space", opts.heatmap.factor_space);
            opts.heatmap.factor_time = h.value("factor_time", opts.heatmap.factor_time);
            opts.heatmap.k_suppress = h.value("k_suppress", opts.heatmap.k_suppress);
        }
        opts.data_dir = cfg.value("data_dir", std::string{});
        opts.log_path = cfg.value("log_file", std::string{});
        opts.crypto_threads = threads_option(cfg, "crypto_threads");

        auto server = std::make_unique<cps_server>();
        server->service = std::make_unique<cps::CarrierService>(std::move(opts));
        server->http = std::make_unique<cps::HttpServer>(*server->service);
        *out = server.release();
    });
}

cps_status cps_server_listen(cps_server* server, const char* host, int port) {
    return guarded([&] {
        if (!server || !host)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        if (!server->http->listen(host, port))
            throw cps::Error(cps::ErrorCode::io_error,
                             "failed to listen on " + std::string(host) + ":" +
                                 std::to_string(port));
    });
}

cps_status cps_server_stop(cps_server* server) {
    return guarded([&] {
        if (!server) throw cps::Error(cps::ErrorCode::invalid_argument, "null server");
        server->http->stop();
    });
}

void cps_server_destroy(cps_server* server) { delete server; }

cps_status cps_server_purge(cps_server* server, uint64_t* removed) {
    return guarded([&] {
        if (!server) throw cps::Error(cps::ErrorCode::invalid_argument, "null server");
        const cps::PurgeOutcome out = server->service->purge_all();
        if (removed) *removed = out.entries_removed;
    });
}

cps_status cps_check_run(const char* config_json, char** report_json) {
    return guarded([&] {
        if (!report_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "check config");
        ClientContext ctx = make_client_context(cfg, /*networked=*/true, /*needs_trace=*/true);
        cps::SecureRandom rng;
        const cps::ExposureOutcome outcome =
            cps::run_exposure_check(ctx.trace, ctx.zones, ctx.client, *ctx.transport, rng);
        *report_json = dup_string(cps::risk_report_to_json(outcome.report).dump());
    });
}

cps_status cps_upload_run(const char* config_json, char** result_json) {
    return guarded([&] {
        if (!result_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "upload config");
        ClientContext ctx = make_client_context(cfg, /*networked=*/true, /*needs_trace=*/true);
        int factor_space = 100, factor_time = 288;
        if (cfg.contains("coarse")) {
            factor_space = cfg.at("coarse").value("factor_space", factor_space);
            factor_time = cfg.at("coarse").value("factor_time", factor_time);
        }
        const cps::UploadSummary summary = cps::run_carrier_upload(
            ctx.trace, ctx.zones, ctx.client, require_string(cfg, "token"), factor_space,
            factor_time, *ctx.transport);
        *result_json = dup_string(json{{"accepted", summary.accepted},
                                       {"skipped_stale", summary.skipped_stale},
                                       {"distinct_intervals", summary.distinct_intervals}}
                                      .dump());
    });
}

cps_status cps_heatmap_fetch(const char* config_json, int64_t from_epoch, int64_t to_epoch,
                             char** heatmap_json) {
    return guarded([&] {
        if (!heatmap_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "heatmap config");
        cps::HttpTransport transport(require_string(cfg, "server_url"));
        *heatmap_json =
            dup_string(transport.heatmap_json(require_string(cfg, "region"), from_epoch,
                                              to_epoch));
    });
}

cps_status cps_flatfile_fetch(const char* config_json, char** text) {
    return guarded([&] {
        if (!text) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "flatfile config");
        cps::HttpTransport transport(require_string(cfg, "server_url"));
        *text = dup_string(transport.flatfile(require_string(cfg, "region")));
    });
}

cps_status cps_flatfile_check(const char* config_json, char** report_json) {
    return guarded([&] {
        if (!report_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "flatfile check config");
        ClientContext ctx = make_client_context(cfg, /*networked=*/false, /*needs_trace=*/true);
        const cps::FlatfileSet flatfile =
            cps::parse_flatfile(read_file(require_string(cfg, "flatfile")));
        const cps::ExposureOutcome outcome =
            cps::check_against_flatfile(ctx.trace, ctx.zones, ctx.client, flatfile);
        *report_json = dup_string(cps::risk_report_to_json(outcome.report).dump());
    });
}

cps_status cps_flatfile_attack(const char* config_json, char** report_json) {
    return guarded([&] {
        if (!report_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "flatfile attack config");
        if (!cfg.contains("attack"))
            throw cps::Error(cps::ErrorCode::invalid_argument, "config requires \"attack\"");
        const json& a = cfg.at("attack");
        const std::string region = require_string(cfg, "region");
        const cps::GridConfig grid = grid_from_json(cfg.value("grid", json::object()), region);
        const cps::FlatfileSet flatfile =
            cps::parse_flatfile(read_file(require_string(cfg, "flatfile")));
        const cps::AttackReport report = cps::flatfile_attack(
            flatfile, grid, a.at("lat_min").get<double>(), a.at("lat_max").get<double>(),
            a.at("lon_min").get<double>(), a.at("lon_max").get<double>(),
            a.at("t_from").get<std::int64_t>(), a.at("t_to").get<std::int64_t>(),
            a.value("max_cells", std::uint64_t{10000000}));
        *report_json = dup_string(report.to_json().dump());
    });
}

cps_status cps_infer_home(const char* config_json, char** zone_json) {
    return guarded([&] {
        if (!zone_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "infer-home config");
        const std::vector<cps::GpsPoint> trace =
            cps::load_trace_file(require_string(cfg, "trace"));
        int start_h = 22, end_h = 6;
        double radius = 200.0;
        std::int64_t offset = 0;
        if (cfg.contains("night")) {
            const json& n = cfg.at("night");
            start_h = n.value("start_h", start_h);
            end_h = n.value("end_h", end_h);
            radius = n.value("radius_m", radius);
            offset = n.value("utc_offset_sec", offset);
        }
        const auto zone = cps::infer_home_zone(trace, start_h, end_h, radius, offset);
        if (!zone) {
            *zone_json = dup_string("null");
            return;
        }
        const std::vector<cps::RedactionZone> one{*zone};
        *zone_json = dup_string(cps::zones_to_json(one));
    });
}

cps_status cps_sim_generate(const char* scenario_json, const char* out_dir,
                            char** summary_json) {
    return guarded([&] {
        if (!out_dir || !summary_json)
            throw cps::Error(cps::ErrorCode::invalid_argument, "null argument");
        const cps::SimConfig cfg =
            cps::SimConfig::from_json(parse_config(scenario_json, "scenario"));
        cps::GridConfig grid{0.0005, 300, cfg.region, 0};
        *summary_json = dup_string(cps::write_population(out_dir, cfg, grid).dump());
    });
}

cps_status cps_sim_run(const char* config_json, char** result_json) {
    return guarded([&] {
        if (!result_json) throw cps::Error(cps::ErrorCode::invalid_argument, "null output");
        const json cfg = parse_config(config_json, "sim config");
        const cps::SimConfig scenario =
            cps::SimConfig::from_json(cfg.value("scenario", json::object()));

        cps::EndToEndOptions opts;
        opts.grid.region = scenario.region;
        const std::string policy = cfg.value("mode_policy", std::string("alternate"));
        if (policy == "alternate")
            opts.mode_policy = cps::EndToEndOptions::ModePolicy::alternate;
        else if (policy == "ordered")
            opts.mode_policy = cps::EndToEndOptions::ModePolicy::ordered_only;
        else if (policy == "shuffled")
            opts.mode_policy = cps::EndToEndOptions::ModePolicy::shuffled_only;
        else
            throw cps::Error(cps::ErrorCode::invalid_argument,
                             "mode_policy must be alternate, ordered or shuffled");
        opts.workers = threads_option(cfg, "workers");
        opts.crypto_threads = cfg.value("crypto_threads", 1u);
        opts.use_http = cfg.value("http", false);
        opts.server_data_dir = cfg.value("server_data_dir", std::string{});
        opts.server_log_path = cfg.value("server_log", std::string{});
        std::unique_ptr<cps::Transcript> transcript;
        if (cfg.contains("transcript")) {
            transcript =
                std::make_unique<cps::Transcript>(cfg.at("transcript").get<std::string>());
            opts.transcript = transcript.get();
        }

        const cps::EndToEndResult result = cps::end_to_end_check(scenario, opts);
        *result_json = dup_string(json{{"report", result.report},
                                       {"all_match", result.all_match},
                                       {"elapsed_sec", result.elapsed_sec}}
                                      .dump());
    });
}

}  // extern "C"
