#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "core/server.hpp"
#include "core/wire.hpp"

namespace cps {

// Captures every request/response body a client sends or receives, for
// privacy audits. File-backed when given a path (bodies can run to
// gigabytes), in-memory otherwise.
class Transcript {
  public:
    Transcript();                             // in-memory
    explicit Transcript(const std::string& path);  // streamed to disk
    ~Transcript();

    void record(const std::string& direction, const std::string& method,
                const std::string& path, const std::string& body);

    // In-memory contents; empty in file mode.
    std::string text() const;
    const std::string& file_path() const { return path_; }
    std::uint64_t entries() const;

  private:
    mutable std::mutex mu_;
    std::string path_;
    std::unique_ptr<std::ofstream> file_;
    std::string buffer_;
    std::uint64_t entries_ = 0;
};

// Client-side view of the regional server.
class ServerTransport {
  public:
    virtual ~ServerTransport() = default;

    virtual ParamsInfo fetch_params(const std::string& region) = 0;
    virtual UploadResponse upload(const std::string& region, const UploadRequest& req) = 0;
    virtual PsiResponse psi(const std::string& region, const PsiRequest& req) = 0;
    virtual std::string flatfile(const std::string& region) = 0;
    virtual std::string heatmap_json(const std::string& region, std::int64_t from,
                                     std::int64_t to) = 0;
};

// Serializes through the exact HTTP wire shapes and calls the service
// directly. With a transcript attached, the captured bytes match what a
// network client would have sent and received.
class InProcessTransport final : public ServerTransport {
  public:
    explicit InProcessTransport(CarrierService& service, Transcript* transcript = nullptr)
        : service_(service), transcript_(transcript) {}

    ParamsInfo fetch_params(const std::string& region) override;
    UploadResponse upload(const std::string& region, const UploadRequest& req) override;
    PsiResponse psi(const std::string& region, const PsiRequest& req) override;
    std::string flatfile(const std::string& region) override;
    std::string heatmap_json(const std::string& region, std::int64_t from,
                             std::int64_t to) override;

  private:
    void capture(const std::string& direction, const std::string& method,
                 const std::string& path, const std::string& body);

    CarrierService& service_;
    Transcript* transcript_;
};

// HTTP client against a running server, same endpoints.
class HttpTransport final : public ServerTransport {
  public:
    explicit HttpTransport(std::string base_url, Transcript* transcript = nullptr);

    ParamsInfo fetch_params(const std::string& region) override;
    UploadResponse upload(const std::string& region, const UploadRequest& req) override;
    PsiResponse psi(const std::string& region, const PsiRequest& req) override;
    std::string flatfile(const std::string& region) override;
    std::string heatmap_json(const std::string& region, std::int64_t from,
                             std::int64_t to) override;

  private:
    std::string get(const std::string& path);
    std::string post_json(const std::string& path, const std::string& body);

    std::string base_url_;
    Transcript* transcript_;
};

}  // namespace cps
