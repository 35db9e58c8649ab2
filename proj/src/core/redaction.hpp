#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/grid.hpp"

namespace cps {

// Equirectangular approximation; adequate at redaction-zone scales.
double distance_m(double lat1, double lon1, double lat2, double lon2);

struct RedactionZone {
    enum class Source { auto_home, manual };

    double lat = 0.0;
    double lon = 0.0;
    double radius_m = 0.0;
    std::string label;
    Source source = Source::manual;

    bool contains(const GpsPoint& p) const {
        return distance_m(lat, lon, p.lat, p.lon) <= radius_m;
    }
};

const char* source_string(RedactionZone::Source s);
RedactionZone::Source source_from_string(const std::string& s);

// Zone file helpers: JSON array of {lat, lon, radius_m, label, source}.
std::vector<RedactionZone> zones_from_json(const std::string& text);
std::string zones_to_json(std::span<const RedactionZone> zones);
std::vector<RedactionZone> load_zones_file(const std::string& path);

// Night-dwell home inference: picks the modal coarse cell (0.001 deg) among
// points whose local hour falls in [night_start_h, night_end_h), and centers
// a zone there. Fewer than 10 night points -> no zone.
std::optional<RedactionZone> infer_home_zone(std::span<const GpsPoint> trace,
                                             int night_start_h, int night_end_h,
                                             double radius_m,
                                             std::int64_t utc_offset_sec = 0);

// Points that survived redaction. Produced only by redact(); downstream
// transforms take this type so nothing can skip the redaction step.
struct RedactedTrace {
    std::vector<GpsPoint> points;
};

// Keeps exactly the points strictly outside every zone; order preserved.
RedactedTrace redact(std::span<const GpsPoint> trace, std::span<const RedactionZone> zones);

struct RetentionPolicy {
    int d_days = 14;
    void validate() const;
    std::int64_t cutoff(std::int64_t now) const {
        return now - static_cast<std::int64_t>(d_days) * 86400;
    }
};

// Removes records older than the retention window; returns removal count.
// TsFn maps a record to its epoch-seconds timestamp.
template <typename Rec, typename TsFn>
std::size_t purge_old(std::vector<Rec>& store, std::int64_t now, const RetentionPolicy& policy,
                      TsFn&& ts) {
    policy.validate();
    const std::int64_t cut = policy.cutoff(now);
    const std::size_t before = store.size();
    std::erase_if(store, [&](const Rec& r) { return ts(r) < cut; });
    return before - store.size();
}

}  // namespace cps
