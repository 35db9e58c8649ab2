#include "core/heatmap.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace cps {

CoarseKey coarsen(const PointInterval& pi, int factor_space, int factor_time) {
    if (factor_space < 1 || factor_time < 1)
        throw Error(ErrorCode::invalid_argument, "coarsening factors must be >= 1");
    return CoarseKey{pi.cell_x / factor_space, pi.cell_y / factor_space,
                     pi.t_idx / factor_time};
}

namespace {
bool cell_order(const HeatmapCell& a, const HeatmapCell& b) {
    if (a.day_idx != b.day_idx) return a.day_idx < b.day_idx;
    if (a.coarse_y != b.coarse_y) return a.coarse_y < b.coarse_y;
    return a.coarse_x < b.coarse_x;
}
}  // namespace

std::vector<HeatmapCell> build_heatmap(std::span<const PointInterval> carrier_intervals,
                                       int factor_space, int factor_time,
                                       std::uint64_t k_suppress) {
    if (k_suppress < 1) throw Error(ErrorCode::invalid_argument, "k_suppress must be >= 1");
    std::map<CoarseKey, std::uint64_t> counts;
    for (const PointInterval& pi : carrier_intervals)
        ++counts[coarsen(pi, factor_space, factor_time)];
    std::vector<HeatmapCell> out;
    out.reserve(counts.size());
    for (const auto& [key, count] : counts) {
        if (count < k_suppress) continue;
        out.push_back(HeatmapCell{key.x, key.y, key.day, count});
    }
    std::sort(out.begin(), out.end(), cell_order);
    return out;
}

std::vector<HeatmapCell> suppress_and_sort(std::vector<HeatmapCell> cells,
                                           std::uint64_t k_suppress) {
    if (k_suppress < 1) throw Error(ErrorCode::invalid_argument, "k_suppress must be >= 1");
    std::erase_if(cells, [&](const HeatmapCell& c) { return c.count < k_suppress; });
    std::sort(cells.begin(), cells.end(), cell_order);
    return cells;
}

std::string heatmap_to_json(std::span<const HeatmapCell> cells) {
    nlohmann::json j = nlohmann::json::array();
    for (const HeatmapCell& c : cells) {
        j.push_back({{"coarse_x", c.coarse_x},
                     {"coarse_y", c.coarse_y},
                     {"day_idx", c.day_idx},
                     {"count", c.count}});
    }
    return j.dump();
}

std::string heatmap_to_csv(std::span<const HeatmapCell> cells) {
    std::ostringstream out;
    out << "coarse_x,coarse_y,day_idx,count\n";
    for (const HeatmapCell& c : cells)
        out << c.coarse_x << ',' << c.coarse_y << ',' << c.day_idx << ',' << c.count << '\n';
    return out.str();
}

}  // namespace cps
