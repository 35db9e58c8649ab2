#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "core/errors.hpp"
#include "core/grid.hpp"
#include "core/rng.hpp"

using namespace cps;

namespace {

GridConfig bos_grid(double delta = 0.0005, std::int64_t tau = 300, std::uint32_t k = 0) {
    return GridConfig{delta, tau, "bos", k};
}

}  // namespace

TEST_CASE("quantize at the origin") {
    const GridConfig cfg = bos_grid(0.01, 120);
    const PointInterval pi = quantize(GpsPoint{0.0, 0.0, 0}, cfg);
    CHECK(pi.cell_x == 18000);
    CHECK(pi.cell_y == 9000);
    CHECK(pi.t_idx == 0);
}

TEST_CASE("quantize a Boston fix") {
    const GridConfig cfg = bos_grid();
    const PointInterval pi = quantize(GpsPoint{42.3601, -71.0589, 1600000000}, cfg);
    CHECK(pi.cell_x == 217882);
    CHECK(pi.cell_y == 264720);
    CHECK(pi.t_idx == 5333333);
}

TEST_CASE("points a centimeter apart share a cell") {
    const GridConfig cfg = bos_grid();
    const GpsPoint a{42.36012, -71.05891, 1600000000};
    const GpsPoint b{42.36012009, -71.05891009, 1600000001};
    CHECK(quantize(a, cfg) == quantize(b, cfg));
}

TEST_CASE("quantize rejects out-of-domain samples") {
    const GridConfig cfg = bos_grid();
    CHECK_THROWS_AS(quantize(GpsPoint{91.0, 0.0, 0}, cfg), Error);
    CHECK_THROWS_AS(quantize(GpsPoint{0.0, 180.0, 0}, cfg), Error);
    CHECK_THROWS_AS(quantize(GpsPoint{0.0, -180.1, 0}, cfg), Error);
    CHECK_THROWS_AS(quantize(GpsPoint{0.0, 0.0, -1}, cfg), Error);
}

TEST_CASE("quantize stays within index bounds at the poles and antimeridian") {
    const GridConfig cfg = bos_grid();
    const std::int32_t nx = cfg.lon_cells();
    const std::int32_t ny = cfg.lat_cells();
    for (const GpsPoint p : {GpsPoint{90.0, 0.0, 0}, GpsPoint{-90.0, 0.0, 0},
                             GpsPoint{0.0, -180.0, 0},
                             GpsPoint{0.0, std::nextafter(180.0, 0.0), 0},
                             GpsPoint{90.0, std::nextafter(180.0, 0.0), 77}}) {
        const PointInterval pi = quantize(p, cfg);
        CHECK(pi.cell_x >= 0);
        CHECK(pi.cell_x < nx);
        CHECK(pi.cell_y >= 0);
        CHECK(pi.cell_y < ny);
    }
}

TEST_CASE("interior neighbors form the 9-cell stencil at one t_idx") {
    const GridConfig cfg = bos_grid();
    const PointInterval pi{1000, 2000, 42};
    const auto nb = neighbors_spatial(pi, cfg);
    REQUIRE(nb.size() == 9);
    for (const PointInterval& n : nb) {
        CHECK(n.t_idx == 42);
        CHECK(std::abs(n.cell_x - pi.cell_x) <= 1);
        CHECK(std::abs(n.cell_y - pi.cell_y) <= 1);
    }
    CHECK(std::count(nb.begin(), nb.end(), pi) == 1);
}

TEST_CASE("longitude wraps at cell_x = 0") {
    const GridConfig cfg = bos_grid();
    const auto nb = neighbors_spatial(PointInterval{0, 2000, 7}, cfg);
    REQUIRE(nb.size() == 9);
    const std::int32_t max_x = cfg.lon_cells() - 1;
    bool wrapped = false;
    for (const PointInterval& n : nb) wrapped = wrapped || n.cell_x == max_x;
    CHECK(wrapped);
}

TEST_CASE("latitude clamps at the south edge") {
    const GridConfig cfg = bos_grid();
    const auto nb = neighbors_spatial(PointInterval{1000, 0, 7}, cfg);
    CHECK(nb.size() == 6);  // one row clamped off the 3x3 stencil
    for (const PointInterval& n : nb) CHECK(n.cell_y >= 0);
}

TEST_CASE("adjacency is symmetric away from the clamped edges") {
    const GridConfig cfg = bos_grid();
    SeededRandom rng(2024);
    for (int i = 0; i < 200; ++i) {
        const PointInterval a{
            static_cast<std::int32_t>(1 + rng.below(static_cast<std::uint64_t>(cfg.lon_cells()) - 2)),
            static_cast<std::int32_t>(1 + rng.below(static_cast<std::uint64_t>(cfg.lat_cells()) - 2)),
            static_cast<std::int64_t>(rng.below(1000000))};
        const auto nbs = neighbors_spatial(a, cfg);
        const PointInterval b = nbs[rng.below(nbs.size())];
        const auto back = neighbors_spatial(b, cfg);
        CHECK(std::count(back.begin(), back.end(), a) == 1);
    }
}

TEST_CASE("expand: empty input") {
    const GridConfig cfg = bos_grid();
    CHECK(expand({}, cfg).empty());
}

TEST_CASE("expand: one interior interval, temporal_k = 0") {
    const GridConfig cfg = bos_grid();
    const std::vector<PointInterval> in{{1000, 2000, 5}};
    CHECK(expand(in, cfg).size() == 9);
}

TEST_CASE("expand: one interior interval, temporal_k = 1 gives 27 cells") {
    const GridConfig cfg = bos_grid(0.0005, 300, 1);
    const std::vector<PointInterval> in{{1000, 2000, 5}};
    const auto out = expand(in, cfg);
    REQUIRE(out.size() == 27);
    std::set<std::int64_t> times;
    for (const PointInterval& pi : out) times.insert(pi.t_idx);
    CHECK(times == std::set<std::int64_t>{4, 5, 6});
}

TEST_CASE("expand never creates negative time and is a superset of its input") {
    const GridConfig cfg = bos_grid(0.0005, 300, 2);
    SeededRandom rng(99);
    std::vector<PointInterval> in;
    for (int i = 0; i < 40; ++i)
        in.push_back({static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.lon_cells()))),
                      static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.lat_cells()))),
                      static_cast<std::int64_t>(rng.below(4))});
    const auto out = expand(in, cfg);
    CHECK(out.size() <= in.size() * 9 * (2 * cfg.temporal_k + 1));
    for (const PointInterval& pi : in)
        CHECK(std::count(out.begin(), out.end(), pi) == 1);
    for (const PointInterval& pi : out) CHECK(pi.t_idx >= 0);
}

TEST_CASE("canonical bytes: zero interval") {
    const GridConfig cfg = bos_grid();
    const auto bytes = canonical_bytes(PointInterval{0, 0, 0}, cfg);
    REQUIRE(bytes.size() == 25);
    CHECK(to_hex(bytes) == "50492d7631626f730000000000000000000000000000000000");
}

TEST_CASE("canonical bytes: small indices big-endian") {
    const GridConfig cfg = bos_grid();
    const auto bytes = canonical_bytes(PointInterval{1, 2, 3}, cfg);
    CHECK(to_hex(bytes) == "50492d7631626f730000000001000000020000000000000003");
}

TEST_CASE("canonical bytes reject a NUL in the region") {
    GridConfig cfg = bos_grid();
    cfg.region = std::string("b\0s", 3);
    CHECK_THROWS_AS(canonical_bytes(PointInterval{0, 0, 0}, cfg), Error);
}

TEST_CASE("canonical bytes are injective per region") {
    const GridConfig cfg = bos_grid();
    SeededRandom rng(31337);
    for (int i = 0; i < 10000; ++i) {
        const PointInterval a{
            static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.lon_cells()))),
            static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(cfg.lat_cells()))),
            static_cast<std::int64_t>(rng.below(10'000'000))};
        PointInterval b = a;
        switch (rng.below(3)) {
            case 0:
                b.cell_x = static_cast<std::int32_t>(
                    rng.below(static_cast<std::uint64_t>(cfg.lon_cells())));
                break;
            case 1:
                b.cell_y = static_cast<std::int32_t>(
                    rng.below(static_cast<std::uint64_t>(cfg.lat_cells())));
                break;
            default: b.t_idx = static_cast<std::int64_t>(rng.below(10'000'000)); break;
        }
        if (a == b) continue;
        CHECK(canonical_bytes(a, cfg) != canonical_bytes(b, cfg));
    }
}

TEST_CASE("bucketing: equal cells imply sub-delta separation") {
    const GridConfig cfg = bos_grid();
    SeededRandom rng(555);
    auto u = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53);
    };
    for (int i = 0; i < 2000; ++i) {
        const GpsPoint a{u(-89.0, 89.0), u(-179.0, 179.0), 1234};
        const GpsPoint b{u(-89.0, 89.0), u(-179.0, 179.0), 1234};
        if (quantize(a, cfg) == quantize(b, cfg)) {
            CHECK(std::abs(a.lat - b.lat) < cfg.delta_deg);
            CHECK(std::abs(a.lon - b.lon) < cfg.delta_deg);
        }
    }
}

TEST_CASE("grid config validation") {
    CHECK_THROWS_AS(GridConfig(-0.1, 300, "bos", 0).validate(), Error);
    CHECK_THROWS_AS(GridConfig(0.0005, 0, "bos", 0).validate(), Error);
    CHECK_THROWS_AS(GridConfig(0.0005, 300, "", 0).validate(), Error);
    CHECK_THROWS_AS(GridConfig(1e-12, 300, "bos", 0).validate(), Error);  // 32-bit overflow
    CHECK_NOTHROW(bos_grid().validate());
}
