#include "core/wire.hpp"

#include "core/errors.hpp"

namespace cps {

using nlohmann::json;

namespace {
template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string(what) + ": " + e.what());
    }
}
}  // namespace

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string(what) + ": " + e.what());
    }
}

json to_json(const UploadRequest& r) {
    json intervals = json::array();
    for (const UploadItem& it : r.intervals)
        intervals.push_back({{"digest_hex", it.digest.hex()}, {"t_idx", it.t_idx}});
    json body{{"token", r.token}, {"intervals", std::move(intervals)}};
    if (!r.coarse_cells.empty()) {
        json coarse = json::array();
        for (const CoarseUpload& c : r.coarse_cells)
            coarse.push_back({{"coarse_x", c.coarse_x},
                              {"coarse_y", c.coarse_y},
                              {"day_idx", c.day_idx},
                              {"count", c.count}});
        body["coarse_cells"] = std::move(coarse);
    }
    return body;
}

UploadRequest upload_request_from_json(const json& j) {
    return guarded("upload request", [&] {
        UploadRequest r;
        r.token = j.at("token").get<std::string>();
        for (const auto& it : j.at("intervals")) {
            UploadItem item;
            item.digest = HashedInterval::from_hex(it.at("digest_hex").get<std::string>());
            item.t_idx = it.at("t_idx").get<std::int64_t>();
            if (item.t_idx < 0)
                throw Error(ErrorCode::out_of_range, "t_idx must be non-negative");
            r.intervals.push_back(item);
        }
        if (j.contains("coarse_cells")) {
            for (const auto& c : j.at("coarse_cells")) {
                CoarseUpload cc;
                cc.coarse_x = c.at("coarse_x").get<std::int32_t>();
                cc.coarse_y = c.at("coarse_y").get<std::int32_t>();
                cc.day_idx = c.at("day_idx").get<std::int64_t>();
                cc.count = c.at("count").get<std::uint64_t>();
                if (cc.count == 0)
                    throw Error(ErrorCode::invalid_argument, "coarse cell count must be positive");
                r.coarse_cells.push_back(cc);
            }
        }
        return r;
    });
}

json to_json(const UploadResponse& r) {
    return json{{"accepted", r.accepted}, {"skipped_stale", r.skipped_stale}};
}

UploadResponse upload_response_from_json(const json& j) {
    return guarded("upload response", [&] {
        UploadResponse r;
        r.accepted = j.at("accepted").get<std::uint64_t>();
        r.skipped_stale = j.at("skipped_stale").get<std::uint64_t>();
        return r;
    });
}

json to_json(const PsiRequest& r) {
    return json{{"mode", psi_mode_string(r.mode)},
                {"elements", r.elements_b64},
                {"client_key_id", r.client_key_id}};
}

PsiRequest psi_request_from_json(const json& j) {
    return guarded("psi request", [&] {
        PsiRequest r;
        r.mode = psi_mode_from_string(j.at("mode").get<std::string>());
        r.elements_b64 = j.at("elements").get<std::vector<std::string>>();
        r.client_key_id = j.at("client_key_id").get<std::string>();
        return r;
    });
}

json to_json(const PsiResponse& r) {
    return json{{"epoch_id", r.epoch_id},
                {"double_blinded", r.double_blinded_b64},
                {"carrier_blinded", r.carrier_blinded_b64}};
}

PsiResponse psi_response_from_json(const json& j) {
    return guarded("psi response", [&] {
        PsiResponse r;
        r.epoch_id = j.at("epoch_id").get<std::uint64_t>();
        r.double_blinded_b64 = j.at("double_blinded").get<std::vector<std::string>>();
        r.carrier_blinded_b64 = j.at("carrier_blinded").get<std::vector<std::string>>();
        return r;
    });
}

json to_json(const ParamsInfo& p) {
    return json{{"delta_deg", p.delta_deg}, {"tau_sec", p.tau_sec},
                {"temporal_k", p.temporal_k}, {"group", p.group},
                {"byte_len", p.byte_len},    {"d_days", p.d_days}};
}

ParamsInfo params_info_from_json(const json& j) {
    return guarded("params response", [&] {
        ParamsInfo p;
        p.delta_deg = j.at("delta_deg").get<double>();
        p.tau_sec = j.at("tau_sec").get<std::int64_t>();
        p.temporal_k = j.at("temporal_k").get<std::uint32_t>();
        p.group = j.at("group").get<std::string>();
        p.byte_len = j.at("byte_len").get<std::uint64_t>();
        p.d_days = j.at("d_days").get<int>();
        return p;
    });
}

json error_body(const std::string& code, const std::string& message) {
    return json{{"code", code}, {"message", message}};
}

}  // namespace cps
