#include "core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/errors.hpp"

namespace cps {

void validate_point(const GpsPoint& p) {
    if (!std::isfinite(p.lat) || p.lat < -90.0 || p.lat > 90.0)
        throw Error(ErrorCode::out_of_range, "latitude out of range [-90, 90]");
    if (!std::isfinite(p.lon) || p.lon < -180.0 || p.lon >= 180.0)
        throw Error(ErrorCode::out_of_range, "longitude out of range [-180, 180)");
    if (p.t < 0) throw Error(ErrorCode::out_of_range, "timestamp must be non-negative");
}

void GridConfig::validate() const {
    if (!(delta_deg > 0.0) || !std::isfinite(delta_deg))
        throw Error(ErrorCode::invalid_argument, "delta_deg must be positive");
    if (std::ceil(360.0 / delta_deg) > static_cast<double>(std::numeric_limits<std::int32_t>::max()))
        throw Error(ErrorCode::invalid_argument, "delta_deg too small for 32-bit cell indices");
    if (tau_sec <= 0) throw Error(ErrorCode::invalid_argument, "tau_sec must be positive");
    if (region.empty() || region.size() > 64)
        throw Error(ErrorCode::invalid_argument, "region label must be 1..64 bytes");
    for (char c : region)
        if (c == '\0' || static_cast<unsigned char>(c) > 0x7e || c < 0x21)
            throw Error(ErrorCode::invalid_argument, "region label must be printable ASCII without NUL");
}

std::int32_t GridConfig::lon_cells() const {
    return static_cast<std::int32_t>(std::ceil(360.0 / delta_deg));
}

std::int32_t GridConfig::lat_cells() const {
    return static_cast<std::int32_t>(std::ceil(180.0 / delta_deg));
}

PointInterval quantize(const GpsPoint& p, const GridConfig& cfg) {
    validate_point(p);
    const std::int64_t nx = cfg.lon_cells();
    const std::int64_t ny = cfg.lat_cells();
    // Valid inputs floor into [0, n); the clamp only absorbs rounding at
    // the inclusive lat = 90 edge, which can land exactly on ny.
    auto bucket = [](double offset, double delta, std::int64_t n) {
        std::int64_t idx = static_cast<std::int64_t>(std::floor(offset / delta));
        if (idx < 0) idx = 0;
        if (idx >= n) idx = n - 1;
        return idx;
    };
    PointInterval out;
    out.cell_x = static_cast<std::int32_t>(bucket(p.lon + 180.0, cfg.delta_deg, nx));
    out.cell_y = static_cast<std::int32_t>(bucket(p.lat + 90.0, cfg.delta_deg, ny));
    out.t_idx = p.t / cfg.tau_sec;
    return out;
}

std::vector<PointInterval> neighbors_spatial(const PointInterval& pi, const GridConfig& cfg) {
    const std::int64_t nx = cfg.lon_cells();
    const std::int64_t ny = cfg.lat_cells();
    std::vector<PointInterval> out;
    out.reserve(9);
    for (int dy = -1; dy <= 1; ++dy) {
        const std::int64_t y = static_cast<std::int64_t>(pi.cell_y) + dy;
        if (y < 0 || y >= ny) continue;  // latitude clamps at the poles
        for (int dx = -1; dx <= 1; ++dx) {
            std::int64_t x = static_cast<std::int64_t>(pi.cell_x) + dx;
            x = ((x % nx) + nx) % nx;  // longitude wraps
            out.push_back({static_cast<std::int32_t>(x), static_cast<std::int32_t>(y), pi.t_idx});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<PointInterval> expand(std::span<const PointInterval> intervals, const GridConfig& cfg) {
    std::vector<PointInterval> out;
    out.reserve(intervals.size() * 9 * (2 * static_cast<std::size_t>(cfg.temporal_k) + 1));
    const std::int64_t k = cfg.temporal_k;
    for (const PointInterval& pi : intervals) {
        for (const PointInterval& nb : neighbors_spatial(pi, cfg)) {
            for (std::int64_t dt = -k; dt <= k; ++dt) {
                const std::int64_t t = nb.t_idx + dt;
                if (t < 0) continue;
                out.push_back({nb.cell_x, nb.cell_y, t});
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {
void put_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v >> 24));
    buf.push_back(static_cast<std::uint8_t>(v >> 16));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
    buf.push_back(static_cast<std::uint8_t>(v));
}
void put_be64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    put_be32(buf, static_cast<std::uint32_t>(v >> 32));
    put_be32(buf, static_cast<std::uint32_t>(v));
}
}  // namespace

std::vector<std::uint8_t> canonical_bytes(const PointInterval& pi, const GridConfig& cfg) {
    for (char c : cfg.region)
        if (c == '\0') throw Error(ErrorCode::invalid_argument, "region label contains NUL");
    std::vector<std::uint8_t> buf;
    buf.reserve(5 + cfg.region.size() + 1 + 4 + 4 + 8);
    const char* tag = "PI-v1";
    buf.insert(buf.end(), tag, tag + 5);
    buf.insert(buf.end(), cfg.region.begin(), cfg.region.end());
    buf.push_back(0x00);
    put_be32(buf, static_cast<std::uint32_t>(pi.cell_x));
    put_be32(buf, static_cast<std::uint32_t>(pi.cell_y));
    put_be64(buf, static_cast<std::uint64_t>(pi.t_idx));
    return buf;
}

HashedInterval hash_interval(const PointInterval& pi, const GridConfig& cfg) {
    return HashedInterval{sha256(canonical_bytes(pi, cfg))};
}

}  // namespace cps
