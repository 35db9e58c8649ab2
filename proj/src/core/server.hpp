#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "core/grid.hpp"
#include "core/heatmap.hpp"
#include "core/psi.hpp"
#include "core/redaction.hpp"
#include "core/wire.hpp"

namespace cps {

struct ServerLimits {
    // Default N sized as 14 days x 288 intervals/day x 9 spatial x 3
    // temporal, rounded up with headroom.
    std::size_t max_elems_per_exchange = 120000;
    std::uint32_t max_queries_per_day = 4;

    void validate() const;
};

struct HeatmapOptions {
    int factor_space = 100;   // ~5.5 km coarse cells at the default grid
    int factor_time = 288;    // one day at tau = 300 s
    std::uint64_t k_suppress = 5;
};

struct ServerOptions {
    GridConfig grid;  // grid.region is ignored; regions listed below
    std::vector<std::string> regions;
    std::string group_name = "modp2048";
    std::string token = "diagnosed";  // stub health-authority authorization
    ServerLimits limits;
    RetentionPolicy retention;
    HeatmapOptions heatmap;
    std::string data_dir;   // empty -> in-memory only
    std::string log_path;   // empty -> no ops log
    unsigned crypto_threads = 1;
    std::function<std::int64_t()> now_fn;  // defaults to wall clock
};

struct StoreEntry {
    HashedInterval digest;
    std::int64_t t_idx = 0;
    std::int64_t upload_time = 0;
};

struct UploadOutcome {
    std::uint64_t accepted = 0;
    std::uint64_t skipped_stale = 0;
    std::uint64_t epoch_id = 0;
};

struct PsiExchangeOutcome {
    std::uint64_t epoch_id = 0;
    std::vector<GroupElement> double_blinded;
    std::vector<GroupElement> carrier_blinded;
};

struct PurgeOutcome {
    std::size_t entries_removed = 0;
    std::size_t coarse_removed = 0;
};

// The semi-trusted regional authority. Holds one store per region;
// answers PSI exchanges against an immutable per-epoch key snapshot, so
// an exchange never straddles a rotation. Readers share; uploads and
// purges take the writer side.
class CarrierService {
  public:
    explicit CarrierService(ServerOptions opts);
    ~CarrierService();

    CarrierService(const CarrierService&) = delete;
    CarrierService& operator=(const CarrierService&) = delete;

    UploadOutcome upload(const std::string& region, std::span<const UploadItem> intervals,
                         std::span<const CoarseUpload> coarse, const std::string& token);

    PsiExchangeOutcome psi_exchange(const std::string& region,
                                    std::span<const GroupElement> client_blinded, PsiMode mode,
                                    const std::string& client_key_id);

    // Newline-delimited lowercase-hex digests, sorted; post-purge view.
    std::string flatfile(const std::string& region);

    std::vector<HeatmapCell> heatmap(const std::string& region, std::int64_t from_epoch,
                                     std::int64_t to_epoch);

    ParamsInfo params_info() const;

    PurgeOutcome purge_region(const std::string& region);
    PurgeOutcome purge_all();

    std::uint64_t epoch(const std::string& region) const;
    std::size_t store_size(const std::string& region) const;
    std::vector<std::string> regions() const;

    const ServerOptions& options() const { return opts_; }
    const GroupParams& group() const { return *group_; }
    std::int64_t now() const { return opts_.now_fn(); }

  private:
    struct EpochState {
        std::uint64_t id = 0;
        PrivateExponent key;
        // Built lazily on the first exchange of the epoch, then shared.
        std::shared_ptr<const std::vector<GroupElement>> blinded_carriers;
    };

    struct Region {
        std::string name;
        std::vector<StoreEntry> entries;
        std::unordered_set<HashedInterval, HashedIntervalHasher> index;
        std::map<CoarseKey, std::uint64_t> coarse_counts;
        std::shared_ptr<const EpochState> epoch;
        mutable std::shared_mutex mu;
        std::mutex build_mu;  // serializes blinded-carrier cache builds
        std::unique_ptr<std::ofstream> journal;
    };

    Region& find_region(const std::string& name);
    const Region& find_region(const std::string& name) const;
    void rotate_epoch_locked(Region& r);  // caller holds r.mu exclusively
    std::shared_ptr<const EpochState> ensure_blinded(Region& r);
    PurgeOutcome purge_one(Region& r);
    void journal_append(Region& r, const nlohmann::json& record);
    void replay_journal(Region& r, const std::string& path);
    void log_event(const std::string& line);

    ServerOptions opts_;
    const GroupParams* group_ = nullptr;
    std::map<std::string, std::unique_ptr<Region>> regions_;

    std::mutex quota_mu_;
    std::unordered_map<std::string, std::uint32_t> quota_;  // key_id @ day -> count

    std::mutex log_mu_;
    std::unique_ptr<std::ofstream> log_;
};

}  // namespace cps
