#include "core/server.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/threading.hpp"

namespace cps {

namespace fs = std::filesystem;
using nlohmann::json;

void ServerLimits::validate() const {
    if (max_elems_per_exchange == 0)
        throw Error(ErrorCode::invalid_argument, "max_elems_per_exchange must be positive");
    if (max_queries_per_day == 0)
        throw Error(ErrorCode::invalid_argument, "max_queries_per_day must be positive");
}

CarrierService::CarrierService(ServerOptions opts) : opts_(std::move(opts)) {
    if (opts_.regions.empty())
        throw Error(ErrorCode::invalid_argument, "server needs at least one region");
    opts_.limits.validate();
    opts_.retention.validate();
    if (opts_.heatmap.factor_space < 1 || opts_.heatmap.factor_time < 1 ||
        opts_.heatmap.k_suppress < 1)
        throw Error(ErrorCode::invalid_argument, "invalid heatmap options");
    if (!opts_.now_fn) {
        opts_.now_fn = [] {
            return static_cast<std::int64_t>(
                std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count());
        };
    }
    group_ = &GroupParams::by_name(opts_.group_name);
    {
        GridConfig probe = opts_.grid;
        probe.region = opts_.regions.front();
        probe.validate();
    }
    if (!opts_.log_path.empty()) {
        log_ = std::make_unique<std::ofstream>(opts_.log_path, std::ios::app);
        if (!*log_) throw Error(ErrorCode::io_error, "cannot open log file: " + opts_.log_path);
    }
    if (!opts_.data_dir.empty()) fs::create_directories(opts_.data_dir);

    for (const std::string& name : opts_.regions) {
        auto region = std::make_unique<Region>();
        region->name = name;
        std::uint64_t start_epoch = 1;
        if (!opts_.data_dir.empty()) {
            const std::string path = (fs::path(opts_.data_dir) / (name + ".jsonl")).string();
            if (fs::exists(path)) {
                replay_journal(*region, path);
                // Prior epoch keys are never persisted; restart begins a
                // fresh epoch so exchanges stay consistent.
                start_epoch = region->epoch ? region->epoch->id + 1 : 1;
            }
            region->journal = std::make_unique<std::ofstream>(path, std::ios::app);
            if (!*region->journal)
                throw Error(ErrorCode::io_error, "cannot open journal: " + path);
        }
        auto ep = std::make_shared<EpochState>();
        ep->id = start_epoch;
        SecureRandom rng;
        ep->key = keygen(*group_, rng);
        region->epoch = std::move(ep);
        journal_append(*region, json{{"op", "epoch"}, {"id", start_epoch}});
        regions_[name] = std::move(region);
    }
    log_event("service started regions=" + std::to_string(regions_.size()));
}

CarrierService::~CarrierService() = default;

CarrierService::Region& CarrierService::find_region(const std::string& name) {
    auto it = regions_.find(name);
    if (it == regions_.end()) throw Error(ErrorCode::unknown_region, "unknown region: " + name);
    return *it->second;
}

const CarrierService::Region& CarrierService::find_region(const std::string& name) const {
    auto it = regions_.find(name);
    if (it == regions_.end()) throw Error(ErrorCode::unknown_region, "unknown region: " + name);
    return *it->second;
}

void CarrierService::rotate_epoch_locked(Region& r) {
    auto ep = std::make_shared<EpochState>();
    ep->id = r.epoch->id + 1;
    SecureRandom rng;
    ep->key = keygen(*group_, rng);
    r.epoch = std::move(ep);
    journal_append(r, json{{"op", "epoch"}, {"id", r.epoch->id}});
}

void CarrierService::journal_append(Region& r, const json& record) {
    if (!r.journal) return;
    *r.journal << record.dump() << '\n';
    r.journal->flush();
}

void CarrierService::replay_journal(Region& r, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot read journal: " + path);
    std::string line;
    std::uint64_t max_epoch = 0;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
            const std::string op = rec.at("op").get<std::string>();
            if (op == "add") {
                StoreEntry e;
                e.digest = HashedInterval::from_hex(rec.at("d").get<std::string>());
                e.t_idx = rec.at("t").get<std::int64_t>();
                e.upload_time = rec.at("u").get<std::int64_t>();
                if (r.index.insert(e.digest).second) r.entries.push_back(e);
            } else if (op == "coarse") {
                CoarseKey key{rec.at("x").get<std::int32_t>(), rec.at("y").get<std::int32_t>(),
                              rec.at("day").get<std::int64_t>()};
                r.coarse_counts[key] += rec.at("c").get<std::uint64_t>();
            } else if (op == "purge") {
                const std::int64_t cut = rec.at("cut").get<std::int64_t>();
                std::erase_if(r.entries, [&](const StoreEntry& e) {
                    return e.t_idx * opts_.grid.tau_sec < cut;
                });
                r.index.clear();
                for (const StoreEntry& e : r.entries) r.index.insert(e.digest);
                const std::int64_t span =
                    static_cast<std::int64_t>(opts_.heatmap.factor_time) * opts_.grid.tau_sec;
                std::erase_if(r.coarse_counts,
                              [&](const auto& kv) { return (kv.first.day + 1) * span <= cut; });
            } else if (op == "epoch") {
                max_epoch = std::max(max_epoch, rec.at("id").get<std::uint64_t>());
            }
        } catch (const std::exception& e) {
            throw Error(ErrorCode::io_error,
                        path + ":" + std::to_string(lineno) + ": corrupt journal: " + e.what());
        }
    }
    if (max_epoch > 0) {
        auto ep = std::make_shared<EpochState>();
        ep->id = max_epoch;
        r.epoch = std::move(ep);  // placeholder; constructor bumps past it
    }
}

void CarrierService::log_event(const std::string& line) {
    if (!log_) return;
    std::lock_guard lk(log_mu_);
    *log_ << "t=" << now() << ' ' << line << '\n';
    log_->flush();
}

UploadOutcome CarrierService::upload(const std::string& region,
                                     std::span<const UploadItem> intervals,
                                     std::span<const CoarseUpload> coarse,
                                     const std::string& token) {
    Region& r = find_region(region);
    if (token != opts_.token || opts_.token.empty())
        throw Error(ErrorCode::bad_token, "diagnosis authorization token rejected");

    const std::int64_t now_s = now();
    const std::int64_t cut = opts_.retention.cutoff(now_s);
    const std::int64_t coarse_span =
        static_cast<std::int64_t>(opts_.heatmap.factor_time) * opts_.grid.tau_sec;

    UploadOutcome out;
    std::unique_lock lk(r.mu);
    for (const UploadItem& item : intervals) {
        if (item.t_idx * opts_.grid.tau_sec < cut) {
            ++out.skipped_stale;
            continue;
        }
        if (!r.index.insert(item.digest).second) continue;  // dedup
        StoreEntry e{item.digest, item.t_idx, now_s};
        r.entries.push_back(e);
        journal_append(r, json{{"op", "add"}, {"d", e.digest.hex()}, {"t", e.t_idx}, {"u", now_s}});
        ++out.accepted;
    }
    if (out.accepted > 0) {
        for (const CoarseUpload& c : coarse) {
            if ((c.day_idx + 1) * coarse_span <= cut) continue;  // stale bucket
            r.coarse_counts[CoarseKey{c.coarse_x, c.coarse_y, c.day_idx}] += c.count;
            journal_append(r, json{{"op", "coarse"},
                                   {"x", c.coarse_x},
                                   {"y", c.coarse_y},
                                   {"day", c.day_idx},
                                   {"c", c.count},
                                   {"u", now_s}});
        }
        // Dataset changed: new epoch, new key, blinded cache dropped.
        rotate_epoch_locked(r);
    }
    out.epoch_id = r.epoch->id;
    lk.unlock();
    log_event("upload region=" + region + " accepted=" + std::to_string(out.accepted) +
              " skipped_stale=" + std::to_string(out.skipped_stale));
    return out;
}

std::shared_ptr<const CarrierService::EpochState> CarrierService::ensure_blinded(Region& r) {
    for (;;) {
        {
            std::shared_lock lk(r.mu);
            if (r.epoch->blinded_carriers) return r.epoch;
        }
        std::lock_guard build(r.build_mu);
        std::vector<HashedInterval> digests;
        std::shared_ptr<const EpochState> snapshot;
        {
            std::shared_lock lk(r.mu);
            if (r.epoch->blinded_carriers) return r.epoch;
            snapshot = r.epoch;
            digests.reserve(r.entries.size());
            for (const StoreEntry& e : r.entries) digests.push_back(e.digest);
        }
        // Heavy part outside the store lock.
        std::vector<GroupElement> raw(digests.size());
        parallel_for(digests.size(), opts_.crypto_threads,
                     [&](std::size_t i) { raw[i] = to_group(digests[i], *group_); });
        auto blinded = std::make_shared<std::vector<GroupElement>>(
            blind(raw, snapshot->key, *group_, opts_.crypto_threads));
        {
            std::unique_lock lk(r.mu);
            if (r.epoch->id == snapshot->id) {
                auto ep = std::make_shared<EpochState>();
                ep->id = snapshot->id;
                ep->key = snapshot->key;
                ep->blinded_carriers = std::move(blinded);
                r.epoch = ep;
                return r.epoch;
            }
        }
        // Epoch rotated while we were blinding; rebuild against the new one.
    }
}

PsiExchangeOutcome CarrierService::psi_exchange(const std::string& region,
                                                std::span<const GroupElement> client_blinded,
                                                PsiMode mode, const std::string& client_key_id) {
    Region& r = find_region(region);
    if (client_blinded.size() > opts_.limits.max_elems_per_exchange)
        throw Error(ErrorCode::limit_oversize,
                    "exchange exceeds " + std::to_string(opts_.limits.max_elems_per_exchange) +
                        " elements");
    {
        const std::string key = client_key_id + "@" + std::to_string(now() / 86400);
        std::lock_guard lk(quota_mu_);
        auto& used = quota_[key];
        if (used >= opts_.limits.max_queries_per_day)
            throw Error(ErrorCode::quota_exhausted, "daily query quota exhausted");
        ++used;
    }

    const std::shared_ptr<const EpochState> ep = ensure_blinded(r);
    PsiExchangeOutcome out;
    out.epoch_id = ep->id;
    {
        // Per-response carrier copy: the cached list is shuffled per client.
        std::vector<GroupElement> carriers = *ep->blinded_carriers;
        SecureRandom rng;
        ServerResponse resp =
            server_respond_preblinded(client_blinded, ep->key, std::move(carriers), mode,
                                      *group_, rng, opts_.crypto_threads);
        out.double_blinded = std::move(resp.double_blinded_client);
        out.carrier_blinded = std::move(resp.carrier_blinded);
    }
    log_event("psi region=" + region + " mode=" + psi_mode_string(mode) +
              " elements=" + std::to_string(client_blinded.size()) +
              " epoch=" + std::to_string(out.epoch_id));
    return out;
}

std::string CarrierService::flatfile(const std::string& region) {
    purge_region(region);
    const Region& r = find_region(region);
    std::shared_lock lk(r.mu);
    std::vector<std::string> lines;
    lines.reserve(r.entries.size());
    for (const StoreEntry& e : r.entries) lines.push_back(e.digest.hex());
    lk.unlock();
    std::sort(lines.begin(), lines.end());
    std::string out;
    out.reserve(lines.size() * 65);
    for (const std::string& l : lines) {
        out += l;
        out += '\n';
    }
    log_event("flatfile region=" + region + " lines=" + std::to_string(lines.size()));
    return out;
}

std::vector<HeatmapCell> CarrierService::heatmap(const std::string& region,
                                                 std::int64_t from_epoch,
                                                 std::int64_t to_epoch) {
    const Region& r = find_region(region);
    const std::int64_t span =
        static_cast<std::int64_t>(opts_.heatmap.factor_time) * opts_.grid.tau_sec;
    std::vector<HeatmapCell> cells;
    {
        std::shared_lock lk(r.mu);
        for (const auto& [key, count] : r.coarse_counts) {
            const std::int64_t start = key.day * span;
            const std::int64_t end = start + span;
            if (end <= from_epoch || start >= to_epoch) continue;  // no overlap
            cells.push_back(HeatmapCell{key.x, key.y, key.day, count});
        }
    }
    return suppress_and_sort(std::move(cells), opts_.heatmap.k_suppress);
}

ParamsInfo CarrierService::params_info() const {
    ParamsInfo p;
    p.delta_deg = opts_.grid.delta_deg;
    p.tau_sec = opts_.grid.tau_sec;
    p.temporal_k = opts_.grid.temporal_k;
    p.group = group_->name;
    p.byte_len = group_->byte_len;
    p.d_days = opts_.retention.d_days;
    return p;
}

PurgeOutcome CarrierService::purge_one(Region& r) {
    const std::int64_t now_s = now();
    const std::int64_t cut = opts_.retention.cutoff(now_s);
    const std::int64_t span =
        static_cast<std::int64_t>(opts_.heatmap.factor_time) * opts_.grid.tau_sec;
    PurgeOutcome out;
    std::unique_lock lk(r.mu);
    const std::size_t before = r.entries.size();
    std::erase_if(r.entries,
                  [&](const StoreEntry& e) { return e.t_idx * opts_.grid.tau_sec < cut; });
    out.entries_removed = before - r.entries.size();
    if (out.entries_removed > 0) {
        r.index.clear();
        for (const StoreEntry& e : r.entries) r.index.insert(e.digest);
    }
    const std::size_t coarse_before = r.coarse_counts.size();
    std::erase_if(r.coarse_counts,
                  [&](const auto& kv) { return (kv.first.day + 1) * span <= cut; });
    out.coarse_removed = coarse_before - r.coarse_counts.size();
    if (out.entries_removed > 0 || out.coarse_removed > 0) {
        journal_append(r, json{{"op", "purge"}, {"cut", cut}});
        if (out.entries_removed > 0) rotate_epoch_locked(r);  // forces key rotation
    }
    lk.unlock();
    if (out.entries_removed > 0 || out.coarse_removed > 0)
        log_event("purge region=" + r.name + " removed=" + std::to_string(out.entries_removed) +
                  " coarse_removed=" + std::to_string(out.coarse_removed));
    return out;
}

PurgeOutcome CarrierService::purge_region(const std::string& region) {
    return purge_one(find_region(region));
}

PurgeOutcome CarrierService::purge_all() {
    PurgeOutcome total;
    for (auto& [name, region] : regions_) {
        const PurgeOutcome one = purge_one(*region);
        total.entries_removed += one.entries_removed;
        total.coarse_removed += one.coarse_removed;
    }
    return total;
}

std::uint64_t CarrierService::epoch(const std::string& region) const {
    const Region& r = find_region(region);
    std::shared_lock lk(r.mu);
    return r.epoch->id;
}

std::size_t CarrierService::store_size(const std::string& region) const {
    const Region& r = find_region(region);
    std::shared_lock lk(r.mu);
    return r.entries.size();
}

std::vector<std::string> CarrierService::regions() const {
    std::vector<std::string> out;
    for (const auto& [name, region] : regions_) out.push_back(name);
    return out;
}

}  // namespace cps
