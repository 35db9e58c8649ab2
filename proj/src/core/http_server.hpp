#pragma once

#include <memory>
#include <string>
#include <thread>

#include "core/server.hpp"

namespace cps {

// HTTP front for a CarrierService. Endpoints, bodies and error codes are
// part of the protocol surface; see README for the full listing.
class HttpServer {
  public:
    explicit HttpServer(CarrierService& service);
    ~HttpServer();

    // Blocks until stop() is called from another thread (or fails to bind).
    bool listen(const std::string& host, int port);

    // Binds an ephemeral port and serves on a background thread. Returns
    // the bound port. Used by tests and the in-tree harness.
    int start_background(const std::string& host = "127.0.0.1");

    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread background_;
};

}  // namespace cps
