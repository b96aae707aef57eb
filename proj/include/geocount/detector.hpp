#pragma once

// Detector passes and ensemble routing.
//
// One pass: resize the ROI by its scale, split into blocks, run the backend on
// each block, drop regions scoring below the pass threshold, and map the rest
// back to ROI pixels. The ensemble runs every pass assigned to a size group
// and keeps the classes belonging to that group.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geocount/backend.hpp"
#include "geocount/classes.hpp"
#include "geocount/merge.hpp"
#include "geocount/parallel.hpp"
#include "geocount/raster.hpp"
#include "geocount/tiler.hpp"

namespace geocount {

struct DetectorConfig {
    std::string name;
    double scale = 1.0;
    int overlap = 0;
    double threshold = 0.5;
    std::string backend_name;
    std::shared_ptr<DetectorBackend> backend;
    std::vector<SizeGroup> size_groups;
    int block = kDefaultBlock;

    [[nodiscard]] bool covers(SizeGroup g) const {
        return std::find(size_groups.begin(), size_groups.end(), g) != size_groups.end();
    }

    void validate() const {
        TileSpec{block, overlap, scale}.validate();
        if (!(threshold >= 0.0 && threshold <= 1.0))
            throw Error(Errc::invalid_argument, name + ": threshold must be in [0,1]");
        if (!backend) throw Error(Errc::invalid_argument, name + ": no backend attached");
    }
};

struct EnsembleConfig {
    std::vector<DetectorConfig> detectors;
    std::shared_ptr<const ClassRegistry> registry =
        std::shared_ptr<const ClassRegistry>(&ClassRegistry::xview(), [](const ClassRegistry*) {});

    void validate() const {
        if (detectors.empty()) throw Error(Errc::invalid_argument, "ensemble has no detectors");
        for (const auto& d : detectors) d.validate();
    }
};

/// The five-pass SSD ensemble: two single-scale "Vanilla" passes (1.0 and 1.3)
/// without overlap, and "Multires" passes with 100 px overlap or heavy downscale.
inline EnsembleConfig preset_ensemble(std::shared_ptr<DetectorBackend> vanilla,
                                      std::shared_ptr<DetectorBackend> multires) {
    using enum SizeGroup;
    EnsembleConfig e;
    e.detectors = {
        {"det1", 1.0, 0, 0.15, "vanilla", vanilla, {small, medium}},
        {"det2", 1.3, 0, 0.06, "vanilla", vanilla, {small, medium}},
        {"det3", 1.0, 100, 0.06, "multires", multires, {small, medium, large}},
        {"det4", 0.7, 100, 0.5, "multires", multires, {medium, large}},
        {"det5", 0.6, 0, 0.06, "multires", multires, {large}},
    };
    return e;
}

/// Threshold raised for upsampled low-resolution imagery.
inline constexpr double kUpsampledThreshold = 0.25;

struct DetectOptions {
    int workers = 1;
    /// Per-run floor on every pass threshold.
    std::optional<double> threshold_override;
    /// Resampling already owed to the ROI (e.g. GSD normalization); boxes are
    /// still reported in the ROI's own pixels.
    double extra_scale = 1.0;
};

inline double effective_threshold(const DetectorConfig& cfg, const DetectOptions& opt) {
    return opt.threshold_override ? std::max(cfg.threshold, *opt.threshold_override) : cfg.threshold;
}

/// One detector pass over an ROI. Output order is canonical: tiles in
/// (offset_y, offset_x) order, then (class, box, score) within a tile.
inline std::vector<Region> run_detector(const RoiImage& img, const DetectorConfig& cfg,
                                        const DetectOptions& opt = {}) {
    cfg.validate();
    const double total = opt.extra_scale * cfg.scale;
    const Raster scaled_store = total == 1.0 ? Raster{} : resize(img.raster, total);
    const Raster& scaled = total == 1.0 ? img.raster : scaled_store;
    const TilePlan plan = plan_tiles(scaled.width(), scaled.height(), TileSpec{cfg.block, cfg.overlap, total});
    const double t = effective_threshold(cfg, opt);
    const double W = img.raster.width(), H = img.raster.height();
    const std::string key = img.key();

    std::vector<std::vector<Region>> per_tile(plan.tiles.size());
    parallel_for(plan.tiles.size(), opt.workers, [&](std::size_t i) {
        const auto& off = plan.tiles[i];
        TileContext ctx{key, cfg.name, i, off.x, off.y, total, cfg.block, scaled.width(), scaled.height()};
        const Raster tile = extract_block(scaled, off.x, off.y, cfg.block);
        std::vector<Region> found;
        try {
            found = cfg.backend->detect(tile, ctx);
        } catch (const BackendError&) {
            throw;
        } catch (const std::exception& e) {
            throw BackendError(cfg.name, ctx.tile_id(), e.what());
        }
        auto& out = per_tile[i];
        for (auto r : found) {
            if (!(r.score >= 0.0 && r.score <= 1.0) || !r.box.valid())
                throw BackendError(cfg.name, ctx.tile_id(), "region with invalid score or box");
            if (r.score < t) continue;
            r.box = clip(r.box, cfg.block, cfg.block);
            r.box = clip(map_to_roi(r.box, off.x, off.y, total), W, H);
            if (r.box.area() <= 0.0) continue;
            out.push_back(r);
        }
        std::sort(out.begin(), out.end(), [](const Region& a, const Region& b) {
            return std::tie(a.class_id, a.box, a.score) < std::tie(b.class_id, b.box, b.score);
        });
    });

    std::vector<Region> all;
    for (auto& v : per_tile) all.insert(all.end(), v.begin(), v.end());
    return all;
}

namespace detail {

inline void keep_group(std::vector<Region>& regions, const ClassRegistry& reg, SizeGroup g) {
    std::erase_if(regions, [&](const Region& r) { return r.score <= 0.0 || reg.group(r.class_id) != g; });
}

}  // namespace detail

/// Candidate set for one size group: every covering pass, group classes only.
inline std::vector<Region> run_ensemble(const RoiImage& img, const EnsembleConfig& ens, SizeGroup group,
                                        const DetectOptions& opt = {}) {
    ens.validate();
    std::vector<Region> cand;
    for (const auto& d : ens.detectors) {
        if (!d.covers(group)) continue;
        auto r = run_detector(img, d, opt);
        cand.insert(cand.end(), r.begin(), r.end());
    }
    detail::keep_group(cand, *ens.registry, group);
    return cand;
}

/// Fused detections for the requested groups. Each pass runs once even when
/// it serves several groups; groups are fused independently.
inline std::vector<Region> detect_roi(const RoiImage& img, const EnsembleConfig& ens,
                                      const MergeConfig& merge, const std::vector<SizeGroup>& groups,
                                      const DetectOptions& opt = {}) {
    ens.validate();
    std::vector<std::optional<std::vector<Region>>> cache(ens.detectors.size());
    std::vector<Region> fused;
    for (SizeGroup g : groups) {
        std::vector<Region> cand;
        for (std::size_t i = 0; i < ens.detectors.size(); ++i) {
            if (!ens.detectors[i].covers(g)) continue;
            if (!cache[i]) cache[i] = run_detector(img, ens.detectors[i], opt);
            cand.insert(cand.end(), cache[i]->begin(), cache[i]->end());
        }
        detail::keep_group(cand, *ens.registry, g);
        auto merged = weighted_nms(cand, merge);
        fused.insert(fused.end(), merged.begin(), merged.end());
    }
    std::sort(fused.begin(), fused.end(), score_order);
    return fused;
}

}  // namespace geocount
