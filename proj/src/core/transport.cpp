#include "core/transport.hpp"

#include <fstream>

#include <httplib.h>

#include "core/errors.hpp"

namespace cps {

using nlohmann::json;

Transcript::Transcript() = default;

Transcript::Transcript(const std::string& path) : path_(path) {
    file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::io_error, "cannot open transcript file: " + path);
}

Transcript::~Transcript() = default;

void Transcript::record(const std::string& direction, const std::string& method,
                        const std::string& path, const std::string& body) {
    const json line{{"dir", direction}, {"method", method}, {"path", path}, {"body", body}};
    std::lock_guard lk(mu_);
    ++entries_;
    if (file_) {
        *file_ << line.dump() << '\n';
        file_->flush();
    } else {
        buffer_ += line.dump();
        buffer_ += '\n';
    }
}

std::string Transcript::text() const {
    std::lock_guard lk(mu_);
    return buffer_;
}

std::uint64_t Transcript::entries() const {
    std::lock_guard lk(mu_);
    return entries_;
}

void InProcessTransport::capture(const std::string& direction, const std::string& method,
                                 const std::string& path, const std::string& body) {
    if (transcript_) transcript_->record(direction, method, path, body);
}

ParamsInfo InProcessTransport::fetch_params(const std::string& region) {
    const std::string path = "/v1/region/" + region + "/params";
    capture("request", "GET", path, "");
    const std::string body = to_json(service_.params_info()).dump();
    capture("response", "GET", path, body);
    return params_info_from_json(parse_json(body, "params response"));
}

UploadResponse InProcessTransport::upload(const std::string& region, const UploadRequest& req) {
    const std::string path = "/v1/region/" + region + "/carrier/upload";
    const std::string req_body = to_json(req).dump();
    capture("request", "POST", path, req_body);
    const UploadRequest parsed = upload_request_from_json(parse_json(req_body, "upload request"));
    const UploadOutcome outcome =
        service_.upload(region, parsed.intervals, parsed.coarse_cells, parsed.token);
    const std::string resp_body =
        to_json(UploadResponse{outcome.accepted, outcome.skipped_stale}).dump();
    capture("response", "POST", path, resp_body);
    return upload_response_from_json(parse_json(resp_body, "upload response"));
}

PsiResponse InProcessTransport::psi(const std::string& region, const PsiRequest& req) {
    const std::string path = "/v1/region/" + region + "/psi";
    const std::string req_body = to_json(req).dump();
    capture("request", "POST", path, req_body);
    const PsiRequest parsed = psi_request_from_json(parse_json(req_body, "psi request"));
    const GroupParams& group = service_.group();
    std::vector<GroupElement> elems;
    elems.reserve(parsed.elements_b64.size());
    for (const std::string& b64 : parsed.elements_b64)
        elems.push_back(element_from_b64(b64, group));
    PsiExchangeOutcome outcome =
        service_.psi_exchange(region, elems, parsed.mode, parsed.client_key_id);
    PsiResponse resp;
    resp.epoch_id = outcome.epoch_id;
    resp.double_blinded_b64.reserve(outcome.double_blinded.size());
    for (const GroupElement& e : outcome.double_blinded)
        resp.double_blinded_b64.push_back(element_to_b64(e, group));
    resp.carrier_blinded_b64.reserve(outcome.carrier_blinded.size());
    for (const GroupElement& e : outcome.carrier_blinded)
        resp.carrier_blinded_b64.push_back(element_to_b64(e, group));
    const std::string resp_body = to_json(resp).dump();
    capture("response", "POST", path, resp_body);
    return psi_response_from_json(parse_json(resp_body, "psi response"));
}

std::string InProcessTransport::flatfile(const std::string& region) {
    const std::string path = "/v1/region/" + region + "/flatfile";
    capture("request", "GET", path, "");
    const std::string body = service_.flatfile(region);
    capture("response", "GET", path, body);
    return body;
}

std::string InProcessTransport::heatmap_json(const std::string& region, std::int64_t from,
                                             std::int64_t to) {
    const std::string path =
        "/v1/region/" + region + "/heatmap?from=" + std::to_string(from) +
        "&to=" + std::to_string(to);
    capture("request", "GET", path, "");
    const std::string body = heatmap_to_json(service_.heatmap(region, from, to));
    capture("response", "GET", path, body);
    return body;
}

namespace {

// Raises cps::Error matching the server's JSON error body.
[[noreturn]] void throw_http_error(int status, const std::string& body) {
    std::string code = "internal_error";
    std::string message = "http status " + std::to_string(status);
    try {
        const json j = json::parse(body);
        code = j.value("code", code);
        message = j.value("message", message);
    } catch (const json::exception&) {
    }
    for (ErrorCode c : {ErrorCode::invalid_argument, ErrorCode::parse_error,
                        ErrorCode::out_of_range, ErrorCode::bad_token,
                        ErrorCode::unknown_region, ErrorCode::limit_oversize,
                        ErrorCode::quota_exhausted, ErrorCode::config_mismatch,
                        ErrorCode::refused, ErrorCode::io_error, ErrorCode::internal_error})
        if (code == code_string(c)) throw Error(c, message);
    throw Error(ErrorCode::internal_error, message);
}

}  // namespace

HttpTransport::HttpTransport(std::string base_url, Transcript* transcript)
    : base_url_(std::move(base_url)), transcript_(transcript) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.empty())
        throw Error(ErrorCode::invalid_argument, "server URL must not be empty");
}

std::string HttpTransport::get(const std::string& path) {
    httplib::Client client(base_url_);
    client.set_read_timeout(600, 0);
    client.set_connection_timeout(10, 0);
    if (transcript_) transcript_->record("request", "GET", path, "");
    httplib::Result res = client.Get(path);
    if (!res)
        throw Error(ErrorCode::network_error,
                    "GET " + path + " failed: " + httplib::to_string(res.error()));
    if (transcript_) transcript_->record("response", "GET", path, res->body);
    if (res->status != 200) throw_http_error(res->status, res->body);
    return res->body;
}

std::string HttpTransport::post_json(const std::string& path, const std::string& body) {
    httplib::Client client(base_url_);
    client.set_read_timeout(600, 0);
    client.set_connection_timeout(10, 0);
    if (transcript_) transcript_->record("request", "POST", path, body);
    httplib::Result res = client.Post(path, body, "application/json");
    if (!res)
        throw Error(ErrorCode::network_error,
                    "POST " + path + " failed: " + httplib::to_string(res.error()));
    if (transcript_) transcript_->record("response", "POST", path, res->body);
    if (res->status != 200) throw_http_error(res->status, res->body);
    return res->body;
}

ParamsInfo HttpTransport::fetch_params(const std::string& region) {
    return params_info_from_json(
        parse_json(get("/v1/region/" + region + "/params"), "params response"));
}

UploadResponse HttpTransport::upload(const std::string& region, const UploadRequest& req) {
    const std::string body =
        post_json("/v1/region/" + region + "/carrier/upload", to_json(req).dump());
    return upload_response_from_json(parse_json(body, "upload response"));
}

PsiResponse HttpTransport::psi(const std::string& region, const PsiRequest& req) {
    const std::string body = post_json("/v1/region/" + region + "/psi", to_json(req).dump());
    return psi_response_from_json(parse_json(body, "psi response"));
}

std::string HttpTransport::flatfile(const std::string& region) {
    return get("/v1/region/" + region + "/flatfile");
}

std::string HttpTransport::heatmap_json(const std::string& region, std::int64_t from,
                                        std::int64_t to) {
    return get("/v1/region/" + region + "/heatmap?from=" + std::to_string(from) +
               "&to=" + std::to_string(to));
}

}  // namespace cps
