#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/heatmap.hpp"
#include "core/psi.hpp"
#include "core/sha256.hpp"

namespace cps {

// JSON wire formats. The in-process transport serializes through these
// exact shapes so a captured transcript matches HTTP byte for byte.

struct UploadItem {
    HashedInterval digest;
    std::int64_t t_idx = 0;
};

struct CoarseUpload {
    std::int32_t coarse_x = 0;
    std::int32_t coarse_y = 0;
    std::int64_t day_idx = 0;
    std::uint64_t count = 0;
};

struct UploadRequest {
    std::string token;
    std::vector<UploadItem> intervals;
    std::vector<CoarseUpload> coarse_cells;
};

struct UploadResponse {
    std::uint64_t accepted = 0;
    std::uint64_t skipped_stale = 0;
};

struct PsiRequest {
    PsiMode mode = PsiMode::ordered;
    std::vector<std::string> elements_b64;
    std::string client_key_id;
};

struct PsiResponse {
    std::uint64_t epoch_id = 0;
    std::vector<std::string> double_blinded_b64;
    std::vector<std::string> carrier_blinded_b64;
};

struct ParamsInfo {
    double delta_deg = 0.0;
    std::int64_t tau_sec = 0;
    std::uint32_t temporal_k = 0;
    std::string group;
    std::uint64_t byte_len = 0;
    int d_days = 0;

    bool operator==(const ParamsInfo&) const = default;
};

nlohmann::json to_json(const UploadRequest&);
UploadRequest upload_request_from_json(const nlohmann::json&);

nlohmann::json to_json(const UploadResponse&);
UploadResponse upload_response_from_json(const nlohmann::json&);

nlohmann::json to_json(const PsiRequest&);
PsiRequest psi_request_from_json(const nlohmann::json&);

nlohmann::json to_json(const PsiResponse&);
PsiResponse psi_response_from_json(const nlohmann::json&);

nlohmann::json to_json(const ParamsInfo&);
ParamsInfo params_info_from_json(const nlohmann::json&);

nlohmann::json error_body(const std::string& code, const std::string& message);

nlohmann::json parse_json(const std::string& text, const char* what);

}  // namespace cps
