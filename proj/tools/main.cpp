// contactpsi command-line front end. Everything goes through the public C
// API in contactpsi.h; this file only assembles configuration (flags >
// env > config file > defaults) and formats output.

#include <contactpsi/contactpsi.h>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitElevatedRisk = 2;

json g_file_cfg = json::object();
bool g_pretty = false;

void fail_json(const std::string& code, const std::string& message) {
    std::cerr << json{{"code", code}, {"message", message}}.dump() << "\n";
}

[[noreturn]] void fail(cps_status status) {
    fail_json(cps_status_name(status), cps_last_error());
    std::exit(kExitError);
}

std::string owned(char* s) {
    std::string out = s ? s : "";
    cps_string_free(s);
    return out;
}

void print_payload(const std::string& payload) {
    if (g_pretty) {
        try {
            std::cout << json::parse(payload).dump(2) << "\n";
            return;
        } catch (const json::exception&) {
        }
    }
    std::cout << payload << "\n";
}

std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

json file_section(std::initializer_list<const char*> path) {
    const json* cur = &g_file_cfg;
    for (const char* key : path) {
        if (!cur->is_object() || !cur->contains(key)) return json();
        cur = &cur->at(key);
    }
    return *cur;
}

void load_config_file(const std::string& explicit_path) {
    std::string path = explicit_path;
    if (path.empty()) {
        if (auto v = env_value("CONTACTPSI_CONFIG")) path = *v;
    }
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) {
        fail_json("io_error", "cannot open config file: " + path);
        std::exit(kExitError);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        g_file_cfg = json::parse(ss.str());
    } catch (const json::exception& e) {
        fail_json("parse_error", std::string("config file: ") + e.what());
        std::exit(kExitError);
    }
    if (!g_file_cfg.is_object()) {
        fail_json("parse_error", "config file must hold a JSON object");
        std::exit(kExitError);
    }
}

// Base client config document handed to the C API: the config file as-is,
// with env/flag overrides layered on top.
json base_client_config() {
    json cfg = g_file_cfg;
    if (auto v = env_value("CONTACTPSI_SERVER_URL")) cfg["server_url"] = *v;
    if (auto v = env_value("CONTACTPSI_REGION")) cfg["region"] = *v;
    if (auto v = env_value("CONTACTPSI_TOKEN")) cfg["token"] = *v;
    if (auto v = env_value("CONTACTPSI_MODE")) cfg["mode"] = *v;
    if (auto v = env_value("CONTACTPSI_KEY_ID")) cfg["client_key_id"] = *v;
    return cfg;
}

void set_if(json& cfg, const char* key, const CLI::Option* opt, const std::string& value) {
    if (opt->count() > 0) cfg[key] = value;
}

int exit_code_for_report(const std::string& report_json) {
    try {
        const std::string level = json::parse(report_json).value("level", "none");
        return (level == "medium" || level == "high") ? kExitElevatedRisk : kExitOk;
    } catch (const json::exception&) {
        return kExitOk;
    }
}

cps_server* g_server = nullptr;

void handle_signal(int) {
    if (g_server) cps_server_stop(g_server);
}

std::string heatmap_csv(const std::string& heatmap_json) {
    std::string out = "coarse_x,coarse_y,day_idx,count\n";
    const json cells = json::parse(heatmap_json);
    for (const json& c : cells) {
        out += std::to_string(c.at("coarse_x").get<long long>()) + "," +
               std::to_string(c.at("coarse_y").get<long long>()) + "," +
               std::to_string(c.at("day_idx").get<long long>()) + "," +
               std::to_string(c.at("count").get<unsigned long long>()) + "\n";
    }
    return out;
}

json scenario_from(const std::string& path, const CLI::Option* seed_opt, std::uint64_t seed) {
    json scenario = file_section({"sim", "scenario"});
    if (!scenario.is_object()) scenario = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            fail_json("io_error", "cannot open scenario file: " + path);
            std::exit(kExitError);
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            scenario = json::parse(ss.str());
        } catch (const json::exception& e) {
            fail_json("parse_error", std::string("scenario file: ") + e.what());
            std::exit(kExitError);
        }
    }
    if (seed_opt->count() > 0) scenario["seed"] = seed;
    return scenario;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contactpsi: privacy-preserving contact tracing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global flags after the subcommand too

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (see README)");
    app.add_flag("--pretty", g_pretty, "pretty-print JSON output");

    // ---- serve ----
    auto* serve = app.add_subcommand("serve", "run a regional carrier server");
    std::vector<std::string> regions;
    std::string bind_host = "0.0.0.0", data_dir, log_file, token, group;
    int port = 8710;
    double delta_deg = 0.0;
    long long tau_sec = 0;
    unsigned temporal_k = 0;
    int d_days = 0;
    long long max_elems = 0;
    unsigned max_queries = 0;
    auto* serve_region = serve->add_option("--region", regions, "region label (repeatable)");
    serve->add_option("--bind", bind_host, "bind address");
    serve->add_option("--port", port, "TCP port");
    auto* serve_data = serve->add_option("--data-dir", data_dir, "journal directory");
    auto* serve_log = serve->add_option("--log-file", log_file, "ops log path");
    auto* serve_token = serve->add_option("--token", token, "upload authorization token");
    auto* serve_group = serve->add_option("--group", group, "modp2048 or test23");
    auto* serve_delta = serve->add_option("--delta-deg", delta_deg, "grid cell edge, degrees");
    auto* serve_tau = serve->add_option("--tau-sec", tau_sec, "time interval, seconds");
    auto* serve_k = serve->add_option("--temporal-k", temporal_k, "temporal expansion");
    auto* serve_d = serve->add_option("--d-days", d_days, "retention window, days");
    auto* serve_max_elems =
        serve->add_option("--max-elems", max_elems, "PSI exchange element limit");
    auto* serve_max_queries =
        serve->add_option("--max-queries", max_queries, "PSI exchanges per key per day");

    // ---- shared client flags ----
    std::string region, server_url, trace_path, zones_path, mode, key_id, upload_token;
    bool auto_home = false;

    auto add_client_flags = [&](CLI::App* cmd, bool with_trace) {
        cmd->add_option("--region", region, "region label");
        cmd->add_option("--server", server_url, "server base URL");
        if (with_trace) {
            cmd->add_option("--trace", trace_path, "trace CSV path")->required();
            cmd->add_option("--zones", zones_path, "redaction zones JSON");
            cmd->add_flag("--auto-home", auto_home, "infer and redact the home area");
        }
    };

    auto* upload = app.add_subcommand("upload", "share a diagnosed carrier's trace");
    add_client_flags(upload, true);
    auto* upload_token_opt = upload->add_option("--token", upload_token, "authorization token");

    auto* check = app.add_subcommand("check", "run a PSI exposure check");
    add_client_flags(check, true);
    auto* check_mode = check->add_option("--mode", mode, "ordered or shuffled");
    auto* check_key = check->add_option("--key-id", key_id, "client API key id");

    auto* heatmap = app.add_subcommand("heatmap", "fetch the aggregated heatmap");
    add_client_flags(heatmap, false);
    long long from_epoch = 0, to_epoch = 0;
    bool csv = false;
    auto* from_opt = heatmap->add_option("--from", from_epoch, "window start, epoch seconds");
    auto* to_opt = heatmap->add_option("--to", to_epoch, "window end, epoch seconds");
    heatmap->add_flag("--csv", csv, "CSV output");

    // ---- flatfile ----
    auto* flatfile = app.add_subcommand("flatfile", "intermediary flat-file mode");
    flatfile->require_subcommand(1);
    std::string flatfile_path, out_path;
    auto* ff_export = flatfile->add_subcommand("export", "download the published digests");
    add_client_flags(ff_export, false);
    ff_export->add_option("--out", out_path, "write to file instead of stdout");
    auto* ff_check = flatfile->add_subcommand("check", "check a trace against a flat file");
    add_client_flags(ff_check, true);
    ff_check->add_option("--file", flatfile_path, "flat file path")->required();
    auto* ff_attack = flatfile->add_subcommand("attack", "grid enumeration attack demo");
    ff_attack->add_option("--region", region, "region label");
    ff_attack->add_option("--file", flatfile_path, "flat file path")->required();
    double a_lat_min = 0, a_lat_max = 0, a_lon_min = 0, a_lon_max = 0;
    long long a_t_from = 0, a_t_to = 0;
    unsigned long long a_max_cells = 10000000ULL;
    ff_attack->add_option("--lat-min", a_lat_min)->required();
    ff_attack->add_option("--lat-max", a_lat_max)->required();
    ff_attack->add_option("--lon-min", a_lon_min)->required();
    ff_attack->add_option("--lon-max", a_lon_max)->required();
    ff_attack->add_option("--t-from", a_t_from)->required();
    ff_attack->add_option("--t-to", a_t_to)->required();
    ff_attack->add_option("--max-cells", a_max_cells, "enumeration budget");

    // ---- sim ----
    auto* sim = app.add_subcommand("sim", "synthetic scenarios and verification");
    sim->require_subcommand(1);
    std::string scenario_path, sim_out, mode_policy = "alternate", transcript_path;
    std::uint64_t seed = 0;
    bool use_http = false;
    unsigned workers = 0, crypto_threads = 0;
    auto* sim_gen = sim->add_subcommand("generate", "write scenario traces as CSV");
    sim_gen->add_option("--scenario", scenario_path, "scenario JSON file");
    auto* sim_gen_seed = sim_gen->add_option("--seed", seed, "override the scenario seed");
    sim_gen->add_option("--out", sim_out, "output directory")->required();
    auto* sim_run = sim->add_subcommand("run", "end-to-end check against the oracle");
    sim_run->add_option("--scenario", scenario_path, "scenario JSON file");
    auto* sim_run_seed = sim_run->add_option("--seed", seed, "override the scenario seed");
    sim_run->add_flag("--http", use_http, "exchange over a real socket");
    sim_run->add_option("--workers", workers, "parallel client checks");
    sim_run->add_option("--crypto-threads", crypto_threads, "threads per exponentiation batch");
    sim_run->add_option("--mode-policy", mode_policy, "alternate | ordered | shuffled");
    sim_run->add_option("--transcript", transcript_path, "capture wire transcript to file");

    // ---- redact ----
    auto* redact = app.add_subcommand("redact", "redaction utilities");
    redact->require_subcommand(1);
    auto* infer = redact->add_subcommand("infer-home", "infer the nighttime home zone");
    infer->add_option("--trace", trace_path, "trace CSV path")->required();
    int night_start = 22, night_end = 6;
    double radius_m = 200.0;
    long long utc_offset = 0;
    infer->add_option("--night-start", night_start, "night window start hour");
    infer->add_option("--night-end", night_end, "night window end hour");
    infer->add_option("--radius", radius_m, "zone radius, meters");
    infer->add_option("--utc-offset", utc_offset, "local-time UTC offset, seconds");

    CLI11_PARSE(app, argc, argv);
    load_config_file(config_path);

    auto client_cfg = [&](CLI::App* cmd, bool with_trace) {
        json cfg = base_client_config();
        set_if(cfg, "region", cmd->get_option("--region"), region);
        set_if(cfg, "server_url", cmd->get_option("--server"), server_url);
        if (with_trace) {
            cfg["trace"] = trace_path;
            set_if(cfg, "zones", cmd->get_option("--zones"), zones_path);
            if (auto_home) cfg["auto_home"] = true;
        }
        return cfg;
    };

    if (serve->parsed()) {
        json cfg = file_section({"server"}).is_object() ? file_section({"server"})
                                                        : json::object();
        if (serve_region->count() > 0) cfg["regions"] = regions;
        if (auto v = env_value("CONTACTPSI_REGION"); v && !cfg.contains("regions"))
            cfg["regions"] = json::array({*v});
        set_if(cfg, "data_dir", serve_data, data_dir);
        if (auto v = env_value("CONTACTPSI_DATA_DIR"); v && serve_data->count() == 0)
            cfg["data_dir"] = *v;
        set_if(cfg, "log_file", serve_log, log_file);
        set_if(cfg, "token", serve_token, token);
        if (auto v = env_value("CONTACTPSI_TOKEN"); v && serve_token->count() == 0)
            cfg["token"] = *v;
        set_if(cfg, "group", serve_group, group);
        if (!cfg.contains("grid")) cfg["grid"] = json::object();
        if (serve_delta->count() > 0) cfg["grid"]["delta_deg"] = delta_deg;
        if (serve_tau->count() > 0) cfg["grid"]["tau_sec"] = tau_sec;
        if (serve_k->count() > 0) cfg["grid"]["temporal_k"] = temporal_k;
        if (serve_d->count() > 0) cfg["d_days"] = d_days;
        if (serve_max_elems->count() > 0) cfg["max_elems_per_exchange"] = max_elems;
        if (serve_max_queries->count() > 0) cfg["max_queries_per_day"] = max_queries;

        cps_server* server = nullptr;
        if (cps_status st = cps_server_create(cfg.dump().c_str(), &server); st != CPS_OK)
            fail(st);
        g_server = server;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        std::cerr << "contactpsi server listening on " << bind_host << ":" << port << "\n";
        const cps_status st = cps_server_listen(server, bind_host.c_str(), port);
        cps_server_destroy(server);
        if (st != CPS_OK) fail(st);
        return kExitOk;
    }

    if (upload->parsed()) {
        json cfg = client_cfg(upload, true);
        set_if(cfg, "token", upload_token_opt, upload_token);
        char* out = nullptr;
        if (cps_status st = cps_upload_run(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        print_payload(owned(out));
        return kExitOk;
    }

    if (check->parsed()) {
        json cfg = client_cfg(check, true);
        set_if(cfg, "mode", check_mode, mode);
        set_if(cfg, "client_key_id", check_key, key_id);
        char* out = nullptr;
        if (cps_status st = cps_check_run(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        const std::string report = owned(out);
        print_payload(report);
        return exit_code_for_report(report);
    }

    if (heatmap->parsed()) {
        json cfg = client_cfg(heatmap, false);
        const std::int64_t from = from_opt->count() ? from_epoch : 0;
        const std::int64_t to = to_opt->count() ? to_epoch : (std::int64_t{1} << 62);
        char* out = nullptr;
        if (cps_status st = cps_heatmap_fetch(cfg.dump().c_str(), from, to, &out); st != CPS_OK)
            fail(st);
        const std::string payload = owned(out);
        if (csv)
            std::cout << heatmap_csv(payload);
        else
            print_payload(payload);
        return kExitOk;
    }

    if (ff_export->parsed()) {
        json cfg = client_cfg(ff_export, false);
        char* out = nullptr;
        if (cps_status st = cps_flatfile_fetch(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        const std::string text = owned(out);
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::trunc);
            if (!f) {
                fail_json("io_error", "cannot write " + out_path);
                return kExitError;
            }
            f << text;
        } else {
            std::cout << text;
        }
        return kExitOk;
    }

    if (ff_check->parsed()) {
        json cfg = client_cfg(ff_check, true);
        cfg["flatfile"] = flatfile_path;
        char* out = nullptr;
        if (cps_status st = cps_flatfile_check(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        const std::string report = owned(out);
        print_payload(report);
        return exit_code_for_report(report);
    }

    if (ff_attack->parsed()) {
        json cfg = base_client_config();
        if (ff_attack->get_option("--region")->count() > 0) cfg["region"] = region;
        cfg["flatfile"] = flatfile_path;
        cfg["attack"] = json{{"lat_min", a_lat_min}, {"lat_max", a_lat_max},
                             {"lon_min", a_lon_min}, {"lon_max", a_lon_max},
                             {"t_from", a_t_from},   {"t_to", a_t_to},
                             {"max_cells", a_max_cells}};
        char* out = nullptr;
        if (cps_status st = cps_flatfile_attack(cfg.dump().c_str(), &out); st != CPS_OK)
            fail(st);
        print_payload(owned(out));
        return kExitOk;
    }

    if (sim_gen->parsed()) {
        const json scenario = scenario_from(scenario_path, sim_gen_seed, seed);
        char* out = nullptr;
        if (cps_status st = cps_sim_generate(scenario.dump().c_str(), sim_out.c_str(), &out);
            st != CPS_OK)
            fail(st);
        print_payload(owned(out));
        return kExitOk;
    }

    if (sim_run->parsed()) {
        json cfg = json::object();
        const json sim_file = file_section({"sim"});
        if (sim_file.is_object()) cfg = sim_file;
        cfg["scenario"] = scenario_from(scenario_path, sim_run_seed, seed);
        if (use_http) cfg["http"] = true;
        if (workers > 0) cfg["workers"] = workers;
        if (crypto_threads > 0) cfg["crypto_threads"] = crypto_threads;
        if (sim_run->get_option("--mode-policy")->count() > 0) cfg["mode_policy"] = mode_policy;
        if (!transcript_path.empty()) cfg["transcript"] = transcript_path;
        char* out = nullptr;
        if (cps_status st = cps_sim_run(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        const json result = json::parse(owned(out));
        // Timing goes to stderr so repeated runs stay byte-identical.
        std::cerr << "elapsed_sec=" << result.value("elapsed_sec", 0.0) << "\n";
        if (g_pretty)
            std::cout << result.at("report").dump(2) << "\n";
        else
            std::cout << result.at("report").dump() << "\n";
        return result.value("all_match", false) ? kExitOk : kExitError;
    }

    if (infer->parsed()) {
        json cfg = base_client_config();
        cfg["trace"] = trace_path;
        cfg["night"] = json{{"start_h", night_start},
                            {"end_h", night_end},
                            {"radius_m", radius_m},
                            {"utc_offset_sec", utc_offset}};
        char* out = nullptr;
        if (cps_status st = cps_infer_home(cfg.dump().c_str(), &out); st != CPS_OK) fail(st);
        print_payload(owned(out));
        return kExitOk;
    }

    return kExitOk;
}
