#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace cps {

constexpr std::size_t kDigestBytes = 32;

// SHA-256 digest of a canonical point-interval encoding. Opaque once
// produced; compared and serialized, never parsed back.
struct HashedInterval {
    std::array<std::uint8_t, kDigestBytes> digest{};

    bool operator==(const HashedInterval&) const = default;
    auto operator<=>(const HashedInterval&) const = default;

    std::string hex() const;
    static HashedInterval from_hex(const std::string& hex);
};

struct HashedIntervalHasher {
    std::size_t operator()(const HashedInterval& h) const noexcept {
        std::size_t v = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i)
            v = (v << 8) | h.digest[i];
        return v;
    }
};

std::array<std::uint8_t, kDigestBytes> sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> data);
std::array<std::uint8_t, kDigestBytes> digest_from_hex(const std::string& hex);

}  // namespace cps
