#pragma once

#include <stdexcept>
#include <string>

namespace cps {

enum class ErrorCode {
    invalid_argument,
    parse_error,
    out_of_range,
    bad_token,
    unknown_region,
    limit_oversize,
    quota_exhausted,
    config_mismatch,
    network_error,
    io_error,
    refused,
    internal_error,
};

// Stable wire identifiers, used in HTTP error bodies and the C API.
inline const char* code_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::bad_token: return "bad_token";
        case ErrorCode::unknown_region: return "unknown_region";
        case ErrorCode::limit_oversize: return "limit_oversize";
        case ErrorCode::quota_exhausted: return "quota_exhausted";
        case ErrorCode::config_mismatch: return "config_mismatch";
        case ErrorCode::network_error: return "network_error";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::refused: return "refused";
        case ErrorCode::internal_error: return "internal_error";
    }
    return "internal_error";
}

inline int http_status(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument:
        case ErrorCode::parse_error:
        case ErrorCode::out_of_range: return 400;
        case ErrorCode::bad_token: return 401;
        case ErrorCode::unknown_region: return 404;
        case ErrorCode::limit_oversize: return 413;
        case ErrorCode::quota_exhausted: return 429;
        case ErrorCode::config_mismatch: return 409;
        case ErrorCode::refused: return 403;
        default: return 500;
    }
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* code_name() const noexcept { return code_string(code_); }

  private:
    ErrorCode code_;
};

}  // namespace cps
