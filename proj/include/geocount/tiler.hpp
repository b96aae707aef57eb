#pragma once

// Splits (rescaled) ROI images into fixed-size detector blocks and maps block
// detections back into ROI pixel space.
//
// Offsets advance by block - overlap and the last block on each axis is
// clamped to the image edge, so tiles never overlap more than requested
// except for that final clamped block. Axes shorter than the block get one
// zero-padded block at offset 0.

#include <algorithm>
#include <vector>

#include "geocount/geo.hpp"

namespace geocount {

inline constexpr int kDefaultBlock = 300;

struct TileSpec {
    int block = kDefaultBlock;
    int overlap = 0;
    double scale = 1.0;

    void validate() const {
        if (block < 1) throw Error(Errc::invalid_argument, "block must be >= 1");
        if (overlap < 0 || overlap >= block)
            throw Error(Errc::invalid_argument, "overlap must be in [0, block)");
        if (!(scale > 0.0)) throw Error(Errc::invalid_argument, "scale must be > 0");
    }
};

struct TileOffset {
    int x = 0;
    int y = 0;
    bool padded = false;
    friend bool operator==(const TileOffset&, const TileOffset&) = default;
};

struct TilePlan {
    int width = 0;
    int height = 0;
    int block = kDefaultBlock;
    std::vector<TileOffset> tiles;
};

inline std::vector<int> plan_axis(int dim, int block, int overlap) {
    if (dim < 1) throw Error(Errc::invalid_argument, "dimension must be >= 1");
    if (block < 1 || overlap < 0 || overlap >= block)
        throw Error(Errc::invalid_argument, "need block >= 1 and 0 <= overlap < block");
    const int stride = block - overlap;
    std::vector<int> offsets;
    for (int o = 0; o + block < dim; o += stride) offsets.push_back(o);
    // Every offset pushed so far is < dim - block, so appending the clamp keeps order.
    offsets.push_back(std::max(0, dim - block));
    return offsets;
}

/// Row-major (y outer, x inner) grid over a scaled image of width x height.
inline TilePlan plan_tiles(int width, int height, const TileSpec& spec) {
    spec.validate();
    TilePlan plan{width, height, spec.block, {}};
    const auto xs = plan_axis(width, spec.block, spec.overlap);
    const auto ys = plan_axis(height, spec.block, spec.overlap);
    const bool padded = width < spec.block || height < spec.block;
    plan.tiles.reserve(xs.size() * ys.size());
    for (int y : ys)
        for (int x : xs) plan.tiles.push_back(TileOffset{x, y, padded});
    return plan;
}

/// Tile-space box -> original ROI space: c' = (c + offset) / scale.
inline PixelBox map_to_roi(const PixelBox& b, int offset_x, int offset_y, double scale) {
    return PixelBox{(b.x1 + offset_x) / scale, (b.y1 + offset_y) / scale,
                    (b.x2 + offset_x) / scale, (b.y2 + offset_y) / scale};
}

/// Inverse of map_to_roi.
inline PixelBox map_to_tile(const PixelBox& b, int offset_x, int offset_y, double scale) {
    return PixelBox{b.x1 * scale - offset_x, b.y1 * scale - offset_y, b.x2 * scale - offset_x,
                    b.y2 * scale - offset_y};
}

}  // namespace geocount
