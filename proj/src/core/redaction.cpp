#include "core/redaction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace cps {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kCoarseDeltaDeg = 0.001;
constexpr std::size_t kMinNightPoints = 10;
}  // namespace

double distance_m(double lat1, double lon1, double lat2, double lon2) {
    const double deg = std::numbers::pi / 180.0;
    double dlon = lon2 - lon1;
    // shortest way around the antimeridian
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    const double x = dlon * deg * std::cos(0.5 * (lat1 + lat2) * deg);
    const double y = (lat2 - lat1) * deg;
    return kEarthRadiusM * std::sqrt(x * x + y * y);
}

const char* source_string(RedactionZone::Source s) {
    return s == RedactionZone::Source::auto_home ? "auto_home" : "manual";
}

RedactionZone::Source source_from_string(const std::string& s) {
    if (s == "auto_home") return RedactionZone::Source::auto_home;
    if (s == "manual") return RedactionZone::Source::manual;
    throw Error(ErrorCode::parse_error, "zone source must be auto_home or manual");
}

std::vector<RedactionZone> zones_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("zone file: ") + e.what());
    }
    if (!j.is_array()) throw Error(ErrorCode::parse_error, "zone file must be a JSON array");
    std::vector<RedactionZone> zones;
    zones.reserve(j.size());
    for (const auto& z : j) {
        RedactionZone zone;
        try {
            zone.lat = z.at("lat").get<double>();
            zone.lon = z.at("lon").get<double>();
            zone.radius_m = z.at("radius_m").get<double>();
            zone.label = z.value("label", std::string{});
            zone.source = source_from_string(z.value("source", std::string{"manual"}));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse_error, std::string("zone file: ") + e.what());
        }
        if (!(zone.radius_m > 0.0))
            throw Error(ErrorCode::invalid_argument, "zone radius_m must be positive");
        zones.push_back(std::move(zone));
    }
    return zones;
}

std::string zones_to_json(std::span<const RedactionZone> zones) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& z : zones) {
        j.push_back({{"lat", z.lat},
                     {"lon", z.lon},
                     {"radius_m", z.radius_m},
                     {"label", z.label},
                     {"source", source_string(z.source)}});
    }
    return j.dump();
}

std::vector<RedactionZone> load_zones_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open zone file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return zones_from_json(ss.str());
}

std::optional<RedactionZone> infer_home_zone(std::span<const GpsPoint> trace,
                                             int night_start_h, int night_end_h,
                                             double radius_m,
                                             std::int64_t utc_offset_sec) {
    if (night_start_h < 0 || night_start_h > 23 || night_end_h < 0 || night_end_h > 23)
        throw Error(ErrorCode::invalid_argument, "night hours must be in [0, 24)");
    if (!(radius_m > 0.0)) throw Error(ErrorCode::invalid_argument, "radius_m must be positive");

    auto in_night = [&](const GpsPoint& p) {
        std::int64_t local = p.t + utc_offset_sec;
        std::int64_t sec = ((local % 86400) + 86400) % 86400;
        const int h = static_cast<int>(sec / 3600);
        if (night_start_h == night_end_h) return false;  // empty window
        if (night_start_h < night_end_h) return h >= night_start_h && h < night_end_h;
        return h >= night_start_h || h < night_end_h;  // wraps midnight
    };

    // Bucket night points on a coarse 2-D grid; the modal cell is "home".
    struct Cell {
        std::int64_t x, y;
        auto operator<=>(const Cell&) const = default;
    };
    std::map<Cell, std::vector<const GpsPoint*>> buckets;
    std::size_t night_points = 0;
    for (const GpsPoint& p : trace) {
        if (!in_night(p)) continue;
        ++night_points;
        Cell c{static_cast<std::int64_t>(std::floor((p.lon + 180.0) / kCoarseDeltaDeg)),
               static_cast<std::int64_t>(std::floor((p.lat + 90.0) / kCoarseDeltaDeg))};
        buckets[c].push_back(&p);
    }
    if (night_points < kMinNightPoints) return std::nullopt;

    const std::vector<const GpsPoint*>* best = nullptr;
    for (const auto& [cell, pts] : buckets)
        if (!best || pts.size() > best->size()) best = &pts;

    double lat_sum = 0.0, lon_sum = 0.0;
    for (const GpsPoint* p : *best) {
        lat_sum += p->lat;
        lon_sum += p->lon;
    }
    RedactionZone zone;
    zone.lat = lat_sum / static_cast<double>(best->size());
    zone.lon = lon_sum / static_cast<double>(best->size());
    zone.radius_m = radius_m;
    zone.label = "inferred home";
    zone.source = RedactionZone::Source::auto_home;
    return zone;
}

RedactedTrace redact(std::span<const GpsPoint> trace, std::span<const RedactionZone> zones) {
    RedactedTrace out;
    out.points.reserve(trace.size());
    for (const GpsPoint& p : trace) {
        bool inside = false;
        for (const RedactionZone& z : zones) {
            if (z.contains(p)) {
                inside = true;
                break;
            }
        }
        if (!inside) out.points.push_back(p);
    }
    return out;
}

void RetentionPolicy::validate() const {
    if (d_days < 1) throw Error(ErrorCode::invalid_argument, "d_days must be >= 1");
}

}  // namespace cps
