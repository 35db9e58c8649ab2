#include "core/sha256.hpp"

#include <openssl/evp.h>

#include "core/errors.hpp"

namespace cps {

std::array<std::uint8_t, kDigestBytes> sha256(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, kDigestBytes> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != kDigestBytes)
        throw Error(ErrorCode::internal_error, "sha256 failed");
    return out;
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

namespace {
int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
}  // namespace

std::array<std::uint8_t, kDigestBytes> digest_from_hex(const std::string& hex) {
    if (hex.size() != kDigestBytes * 2)
        throw Error(ErrorCode::parse_error, "digest hex must be 64 characters");
    std::array<std::uint8_t, kDigestBytes> out{};
    for (std::size_t i = 0; i < kDigestBytes; ++i) {
        const int hi = hex_nibble(hex[2 * i]);
        const int lo = hex_nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::parse_error, "invalid hex digit in digest");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string HashedInterval::hex() const { return to_hex(digest); }

HashedInterval HashedInterval::from_hex(const std::string& hex) {
    return HashedInterval{digest_from_hex(hex)};
}

}  // namespace cps
