#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/grid.hpp"

namespace cps {

struct CoarseKey {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int64_t day = 0;

    bool operator==(const CoarseKey&) const = default;
    auto operator<=>(const CoarseKey&) const = default;
};

// Floor division of each index by its factor; factors >= 1.
CoarseKey coarsen(const PointInterval& pi, int factor_space, int factor_time);

struct HeatmapCell {
    std::int32_t coarse_x = 0;
    std::int32_t coarse_y = 0;
    std::int64_t day_idx = 0;
    std::uint64_t count = 0;

    bool operator==(const HeatmapCell&) const = default;
};

// Group-by coarse cell, drop counts below k_suppress, sort by
// (day_idx, coarse_y, coarse_x). Canonical and golden-file stable.
std::vector<HeatmapCell> build_heatmap(std::span<const PointInterval> carrier_intervals,
                                       int factor_space, int factor_time,
                                       std::uint64_t k_suppress);

// Same suppression/ordering applied to pre-counted coarse cells (the
// on-device coarse stream accumulated by the server).
std::vector<HeatmapCell> suppress_and_sort(std::vector<HeatmapCell> cells,
                                           std::uint64_t k_suppress);

std::string heatmap_to_json(std::span<const HeatmapCell> cells);
std::string heatmap_to_csv(std::span<const HeatmapCell> cells);

}  // namespace cps
