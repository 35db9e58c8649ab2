#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/sha256.hpp"

namespace cps {

// Raw timestamped GPS sample. Never leaves the client side.
struct GpsPoint {
    double lat = 0.0;   // degrees, [-90, 90]
    double lon = 0.0;   // degrees, [-180, 180)
    std::int64_t t = 0; // epoch seconds, >= 0
};

// Throws Error(out_of_range) when the sample is outside the domain.
void validate_point(const GpsPoint& p);

// Shared partition of (lat, lon, time) into discrete cells. Every device
// and the regional server must agree on these values bit-for-bit, or
// hashed intervals silently never match.
struct GridConfig {
    double delta_deg = 0.0005;   // cell edge, ~55 m of latitude
    std::int64_t tau_sec = 300;  // time interval length
    std::string region;          // short ASCII label, no NUL
    std::uint32_t temporal_k = 0;

    void validate() const;

    std::int32_t lon_cells() const;  // ceil(360 / delta_deg)
    std::int32_t lat_cells() const;  // ceil(180 / delta_deg)
};

// Discrete 3-D grid cell.
struct PointInterval {
    std::int32_t cell_x = 0;
    std::int32_t cell_y = 0;
    std::int64_t t_idx = 0;

    bool operator==(const PointInterval&) const = default;
    auto operator<=>(const PointInterval&) const = default;
};

struct PointIntervalHasher {
    std::size_t operator()(const PointInterval& p) const noexcept {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        auto mix = [&h](std::uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        };
        mix(static_cast<std::uint32_t>(p.cell_x));
        mix(static_cast<std::uint32_t>(p.cell_y));
        mix(static_cast<std::uint64_t>(p.t_idx));
        return static_cast<std::size_t>(h);
    }
};

// Pure floor-division bucketing of a valid sample.
PointInterval quantize(const GpsPoint& p, const GridConfig& cfg);

// The cell itself plus up to 8 spatial neighbors at the same t_idx.
// Longitude wraps, latitude clamps; result is sorted and duplicate-free.
std::vector<PointInterval> neighbors_spatial(const PointInterval& pi, const GridConfig& cfg);

// Union of spatial neighborhoods replicated over t_idx offsets
// -temporal_k..+temporal_k (negative times dropped). Sorted, deduplicated.
std::vector<PointInterval> expand(std::span<const PointInterval> intervals, const GridConfig& cfg);

// Canonical byte encoding hashed by every device:
//   "PI-v1" || region || 0x00 || cell_x BE4 || cell_y BE4 || t_idx BE8
// Injective for a fixed region; bit-exact across platforms.
std::vector<std::uint8_t> canonical_bytes(const PointInterval& pi, const GridConfig& cfg);

// SHA-256 of canonical_bytes: the paper's H(p).
HashedInterval hash_interval(const PointInterval& pi, const GridConfig& cfg);

}  // namespace cps
