#include "core/http_server.hpp"

#include <algorithm>
#include <limits>

#include <httplib.h>

#include "core/errors.hpp"

namespace cps {

using nlohmann::json;

struct HttpServer::Impl {
    explicit Impl(CarrierService& svc) : service(svc) {}

    CarrierService& service;
    httplib::Server server;

    template <typename Fn>
    void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            res.status = http_status(e.code());
            res.set_content(error_body(e.code_name(), e.what()).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(error_body("internal_error", e.what()).dump(), "application/json");
        }
        (void)req;
    }
};

HttpServer::HttpServer(CarrierService& service) : impl_(std::make_unique<Impl>(service)) {
    httplib::Server& s = impl_->server;
    CarrierService& svc = impl_->service;

    // PSI bodies legitimately run to tens of megabytes at the default
    // exchange limit; let the application-level size check answer.
    s.set_payload_max_length(512ull * 1024 * 1024);

    s.Post(R"(/v1/region/([^/]+)/carrier/upload)",
           [this, &svc](const httplib::Request& req, httplib::Response& res) {
               impl_->handle(req, res, [&] {
                   const UploadRequest up =
                       upload_request_from_json(parse_json(req.body, "upload request"));
                   const UploadOutcome out =
                       svc.upload(req.matches[1], up.intervals, up.coarse_cells, up.token);
                   res.set_content(
                       to_json(UploadResponse{out.accepted, out.skipped_stale}).dump(),
                       "application/json");
               });
           });

    s.Post(R"(/v1/region/([^/]+)/psi)",
           [this, &svc](const httplib::Request& req, httplib::Response& res) {
               impl_->handle(req, res, [&] {
                   const PsiRequest pr = psi_request_from_json(parse_json(req.body, "psi request"));
                   const GroupParams& group = svc.group();
                   std::vector<GroupElement> elems;
                   elems.reserve(pr.elements_b64.size());
                   for (const std::string& b64 : pr.elements_b64)
                       elems.push_back(element_from_b64(b64, group));
                   PsiExchangeOutcome out =
                       svc.psi_exchange(req.matches[1], elems, pr.mode, pr.client_key_id);
                   PsiResponse resp;
                   resp.epoch_id = out.epoch_id;
                   resp.double_blinded_b64.reserve(out.double_blinded.size());
                   for (const GroupElement& e : out.double_blinded)
                       resp.double_blinded_b64.push_back(element_to_b64(e, group));
                   resp.carrier_blinded_b64.reserve(out.carrier_blinded.size());
                   for (const GroupElement& e : out.carrier_blinded)
                       resp.carrier_blinded_b64.push_back(element_to_b64(e, group));
                   res.set_content(to_json(resp).dump(), "application/json");
               });
           });

    s.Get(R"(/v1/region/([^/]+)/flatfile)",
          [this, &svc](const httplib::Request& req, httplib::Response& res) {
              impl_->handle(req, res, [&] {
                  res.set_content(svc.flatfile(req.matches[1]), "text/plain");
              });
          });

    s.Get(R"(/v1/region/([^/]+)/heatmap)",
          [this, &svc](const httplib::Request& req, httplib::Response& res) {
              impl_->handle(req, res, [&] {
                  std::int64_t from = 0;
                  std::int64_t to = std::numeric_limits<std::int64_t>::max();
                  try {
                      if (req.has_param("from")) from = std::stoll(req.get_param_value("from"));
                      if (req.has_param("to")) to = std::stoll(req.get_param_value("to"));
                  } catch (const std::exception&) {
                      throw Error(ErrorCode::parse_error, "from/to must be epoch seconds");
                  }
                  res.set_content(heatmap_to_json(svc.heatmap(req.matches[1], from, to)),
                                  "application/json");
              });
          });

    s.Get(R"(/v1/region/([^/]+)/params)",
          [this, &svc](const httplib::Request& req, httplib::Response& res) {
              impl_->handle(req, res, [&] {
                  // Params are global; still 404 unknown regions.
                  const std::vector<std::string> known = svc.regions();
                  if (std::find(known.begin(), known.end(), std::string(req.matches[1])) ==
                      known.end())
                      throw Error(ErrorCode::unknown_region,
                                  "unknown region: " + std::string(req.matches[1]));
                  res.set_content(to_json(svc.params_info()).dump(), "application/json");
              });
          });
}

HttpServer::~HttpServer() {
    stop();
}

bool HttpServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int HttpServer::start_background(const std::string& host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port <= 0) throw Error(ErrorCode::io_error, "failed to bind an ephemeral port");
    background_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
    if (background_.joinable()) background_.join();
}

}  // namespace cps
