/*
 * contactpsi — privacy-preserving contact tracing toolkit.
 *
 * C API over the core library: opaque handles, status codes, and
 * JSON-configured workflows. All char* results are heap strings owned by
 * the caller; release them with cps_string_free(). Functions returning
 * cps_status leave outputs untouched on failure; the failure message is
 * available per thread via cps_last_error().
 */
#ifndef CONTACTPSI_H
#define CONTACTPSI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cps_status {
    CPS_OK = 0,
    CPS_ERR_INVALID_ARGUMENT = 1,
    CPS_ERR_PARSE = 2,
    CPS_ERR_OUT_OF_RANGE = 3,
    CPS_ERR_BAD_TOKEN = 4,
    CPS_ERR_UNKNOWN_REGION = 5,
    CPS_ERR_LIMIT_OVERSIZE = 6,
    CPS_ERR_QUOTA_EXHAUSTED = 7,
    CPS_ERR_CONFIG_MISMATCH = 8,
    CPS_ERR_NETWORK = 9,
    CPS_ERR_IO = 10,
    CPS_ERR_REFUSED = 11,
    CPS_ERR_INTERNAL = 12
} cps_status;

const char* cps_version(void);
const char* cps_status_name(cps_status status);

/* Message from the most recent failing call on this thread. */
const char* cps_last_error(void);

void cps_string_free(char* s);

/* ---- spacetime grid ------------------------------------------------- */

typedef struct cps_grid cps_grid;

cps_status cps_grid_create(double delta_deg, int64_t tau_sec, const char* region,
                           uint32_t temporal_k, cps_grid** out);
void cps_grid_destroy(cps_grid* grid);

cps_status cps_grid_quantize(const cps_grid* grid, double lat, double lon, int64_t t,
                             int32_t* cell_x, int32_t* cell_y, int64_t* t_idx);

/* Canonical encoding of a cell; buf receives *len bytes (<= cap). */
cps_status cps_grid_canonical_bytes(const cps_grid* grid, int32_t cell_x, int32_t cell_y,
                                    int64_t t_idx, uint8_t* buf, size_t cap, size_t* len);

/* SHA-256 of the canonical encoding. */
cps_status cps_grid_hash_interval(const cps_grid* grid, int32_t cell_x, int32_t cell_y,
                                  int64_t t_idx, uint8_t digest[32]);

/* ---- regional carrier server ---------------------------------------- */

typedef struct cps_server cps_server;

/*
 * config_json (all fields optional unless noted):
 * {
 *   "regions": ["bos"],                  // required, at least one
 *   "grid": {"delta_deg":0.0005, "tau_sec":300, "temporal_k":0},
 *   "group": "modp2048",
 *   "token": "...",                      // upload authorization secret
 *   "d_days": 14,
 *   "max_elems_per_exchange": 120000,
 *   "max_queries_per_day": 4,
 *   "heatmap": {"factor_space":100, "factor_time":288, "k_suppress":5},
 *   "data_dir": "path",                  // append-only journals; omit for RAM
 *   "log_file": "path",
 *   "crypto_threads": 0                  // 0 = one per hardware thread
 * }
 */
cps_status cps_server_create(const char* config_json, cps_server** out);

/* Blocks until cps_server_stop() is called from another thread/handler. */
cps_status cps_server_listen(cps_server* server, const char* host, int port);

cps_status cps_server_stop(cps_server* server);
void cps_server_destroy(cps_server* server);

/* Runs the retention purge across all regions; returns removed entries. */
cps_status cps_server_purge(cps_server* server, uint64_t* removed);

/* ---- client workflows ------------------------------------------------ */

/*
 * Workflows take one JSON config object; unused keys are ignored so the
 * same document can drive every command:
 * {
 *   "server_url": "http://host:port",    // required for networked calls
 *   "region": "bos",                     // required
 *   "trace": "trace.csv",
 *   "zones": "zones.json",
 *   "auto_home": false,                  // infer + apply a home zone
 *   "mode": "ordered" | "shuffled",
 *   "grid": {...},                       // pinned; omit to adopt /params
 *   "thresholds": {"low":1, "medium":3, "high":10},
 *   "token": "...",                      // upload workflow
 *   "client_key_id": "cli",
 *   "coarse": {"factor_space":100, "factor_time":288},
 *   "flatfile": "digests.txt",           // flatfile workflows
 *   "attack": {"lat_min":.., "lat_max":.., "lon_min":.., "lon_max":..,
 *              "t_from":.., "t_to":.., "max_cells":10000000},
 *   "night": {"start_h":22, "end_h":6, "radius_m":200, "utc_offset_sec":0},
 *   "crypto_threads": 0
 * }
 */

/* Exposure check via PSI; *report_json gets the RiskReport. */
cps_status cps_check_run(const char* config_json, char** report_json);

/* Diagnosed-carrier upload; *result_json gets {accepted, skipped_stale,
 * distinct_intervals}. */
cps_status cps_upload_run(const char* config_json, char** result_json);

/* Aggregated heatmap; *heatmap_json gets the server's JSON array. */
cps_status cps_heatmap_fetch(const char* config_json, int64_t from_epoch, int64_t to_epoch,
                             char** heatmap_json);

/* Flat-file intermediary mode. */
cps_status cps_flatfile_fetch(const char* config_json, char** text);
cps_status cps_flatfile_check(const char* config_json, char** report_json);
cps_status cps_flatfile_attack(const char* config_json, char** report_json);

/* Home-zone inference from a trace; *zone_json gets the zone or null. */
cps_status cps_infer_home(const char* config_json, char** zone_json);

/* ---- simulation harness ---------------------------------------------- */

/*
 * scenario_json: SimConfig fields (n_users, n_carriers, lat_min, lat_max,
 * lon_min, lon_max, duration_days, step_sec, speed_min_mps, speed_max_mps,
 * seed, n_contacts, start_epoch, region), all optional.
 */
cps_status cps_sim_generate(const char* scenario_json, const char* out_dir,
                            char** summary_json);

/*
 * config_json: {"scenario": {...}, "workers":0, "crypto_threads":0,
 * "http":false, "mode_policy":"alternate"|"ordered"|"shuffled",
 * "transcript": "path", "server_data_dir": "path", "server_log": "path"}.
 * *result_json gets {"report": <deterministic report>, "elapsed_sec": s,
 * "all_match": bool}.
 */
cps_status cps_sim_run(const char* config_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* CONTACTPSI_H */
