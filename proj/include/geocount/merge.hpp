#pragma once

// Confidence-weighted non-maximum suppression.
//
// Repeatedly take the highest-scoring remaining candidate as seed, gather every
// remaining candidate whose IoU with the seed exceeds sigma (same class only
// when class_aware), and replace the group with one region whose corners are
// the score-weighted mean of the group's corners. The fused score is the
// group maximum, i.e. the seed's score. Only the seed is tested against
// candidates, never the running merged box.

#include <algorithm>
#include <numeric>
#include <vector>

#include "geocount/detection.hpp"

namespace geocount {

struct MergeConfig {
    double sigma = 0.5;
    bool class_aware = true;

    void validate() const {
        if (!(sigma > 0.0 && sigma < 1.0))
            throw Error(Errc::invalid_argument, "sigma must lie in (0, 1)");
    }
};

namespace detail {

// Fuses one partition whose indices are already in score order. Candidates
// that can overlap the seed are found through an x1-sorted index: any box
// with positive intersection has x1 in (seed.x1 - max_width, seed.x2).
inline void fuse_partition(const std::vector<Region>& cand, const std::vector<std::size_t>& order,
                           double sigma, std::vector<Region>& out) {
    const std::size_t n = order.size();
    if (n == 0) return;
    std::vector<std::size_t> by_x(order);
    std::sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) {
        return cand[a].box.x1 < cand[b].box.x1;
    });
    std::vector<double> xs(n);
    double max_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = cand[by_x[i]].box.x1;
        max_w = std::max(max_w, cand[by_x[i]].box.width());
    }
    // rank[c] = position of candidate c in the score order; removed flags use it.
    std::vector<std::size_t> rank(cand.size());
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;
    std::vector<char> removed(n, 0);
    std::vector<std::size_t> group;

    for (std::size_t s = 0; s < n; ++s) {
        if (removed[s]) continue;
        const Region& seed = cand[order[s]];
        removed[s] = 1;
        group.assign(1, order[s]);

        auto lo = std::upper_bound(xs.begin(), xs.end(), seed.box.x1 - max_w) - xs.begin();
        auto hi = std::lower_bound(xs.begin(), xs.end(), seed.box.x2) - xs.begin();
        for (auto k = lo; k < hi; ++k) {
            const std::size_t c = by_x[static_cast<std::size_t>(k)];
            const std::size_t r = rank[c];
            if (removed[r]) continue;
            if (iou(seed.box, cand[c].box) > sigma) {
                removed[r] = 1;
                group.push_back(c);
            }
        }
        if (group.size() == 1) {
            out.push_back(seed);  // w*b/w can drift by an ulp
            continue;
        }
        // Accumulate in score order so the result does not depend on the x index.
        std::sort(group.begin(), group.end(),
                  [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
        double wsum = 0.0, x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
        for (std::size_t c : group) {
            const Region& r = cand[c];
            wsum += r.score;
            x1 += r.score * r.box.x1;
            y1 += r.score * r.box.y1;
            x2 += r.score * r.box.x2;
            y2 += r.score * r.box.y2;
        }
        out.push_back(Region{seed.class_id, PixelBox{x1 / wsum, y1 / wsum, x2 / wsum, y2 / wsum},
                             seed.score});
    }
}

}  // namespace detail

/// Fuses the candidate set; output sorted by descending score then tie key.
inline std::vector<Region> weighted_nms(const std::vector<Region>& candidates,
                                        const MergeConfig& cfg = {}) {
    cfg.validate();
    for (const auto& r : candidates)
        if (!(r.score > 0.0) || !r.box.valid())
            throw Error(Errc::invalid_argument, "NMS candidates need positive scores and valid boxes");

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return score_order(candidates[a], candidates[b]);
    });

    std::vector<Region> out;
    if (!cfg.class_aware) {
        detail::fuse_partition(candidates, order, cfg.sigma, out);
    } else {
        // Stable partition by class keeps each partition in score order.
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return candidates[a].class_id < candidates[b].class_id;
        });
        std::size_t begin = 0;
        std::vector<std::size_t> part;
        while (begin < order.size()) {
            std::size_t end = begin;
            const int cls = candidates[order[begin]].class_id;
            while (end < order.size() && candidates[order[end]].class_id == cls) ++end;
            part.assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                        order.begin() + static_cast<std::ptrdiff_t>(end));
            detail::fuse_partition(candidates, part, cfg.sigma, out);
            begin = end;
        }
    }
    std::sort(out.begin(), out.end(), score_order);
    return out;
}

}  // namespace geocount
