#pragma once

// Synthetic scenes with exact ground truth, and a noisy-detector channel that
// turns ground truth into detector-like output (misses, jitter, false alarms).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geocount/annotation.hpp"
#include "geocount/detection.hpp"
#include "geocount/random.hpp"
#include "geocount/raster.hpp"

namespace geocount {

struct IntRange {
    int lo = 0;
    int hi = 0;
};

struct DoubleRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct ObjectSpec {
    int class_id = 0;
    IntRange count;
    IntRange width;
    IntRange height;
    std::uint8_t value = 200;
};

struct SceneSpec {
    int width = 800;
    int height = 800;
    int channels = 3;
    std::uint8_t background = 64;
    int min_separation = 0;
    std::vector<ObjectSpec> objects;
    std::vector<std::string> timestamps;

    void validate() const {
        if (width < 1 || height < 1) throw Error(Errc::invalid_argument, "scene must be non-empty");
        if (min_separation < 0) throw Error(Errc::invalid_argument, "min_separation must be >= 0");
        for (const auto& o : objects) {
            if (o.count.lo < 0 || o.count.hi < o.count.lo)
                throw Error(Errc::invalid_argument, "object count range invalid");
            if (o.width.lo < 1 || o.width.hi < o.width.lo || o.height.lo < 1 ||
                o.height.hi < o.height.lo)
                throw Error(Errc::invalid_argument, "object size range invalid");
            if (o.width.hi > width || o.height.hi > height)
                throw Error(Errc::invalid_argument, "object size exceeds scene");
        }
    }
};

struct Scene {
    std::vector<Annotation> annotations;
    Raster raster;
};

namespace detail {

/// Integer boxes are separated when the gap along x or y is at least `sep`.
inline bool separated(const PixelBox& a, const PixelBox& b, double sep) {
    const double gap_x = std::max(b.x1 - a.x2, a.x1 - b.x2);
    const double gap_y = std::max(b.y1 - a.y2, a.y1 - b.y2);
    return std::max(gap_x, gap_y) >= sep;
}

}  // namespace detail

/// Places filled rectangles by rejection sampling. Fails with PackingFailed
/// once 10 * n placements have been rejected.
inline Scene generate_scene(std::uint64_t seed, const SceneSpec& spec) {
    spec.validate();
    Xorshift64Star rng(seed);

    std::vector<int> counts;
    std::size_t total = 0;
    for (const auto& o : spec.objects) {
        counts.push_back(static_cast<int>(rng.uniform_int(o.count.lo, o.count.hi)));
        total += static_cast<std::size_t>(counts.back());
    }

    Scene scene{{}, Raster(spec.width, spec.height, spec.channels, spec.background)};
    scene.annotations.reserve(total);
    const std::size_t budget = 10 * total;
    std::size_t rejected = 0;
    const double sep = spec.min_separation;

    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& o = spec.objects[k];
        for (int n = 0; n < counts[k]; ++n) {
            for (;;) {
                const int w = static_cast<int>(rng.uniform_int(o.width.lo, o.width.hi));
                const int h = static_cast<int>(rng.uniform_int(o.height.lo, o.height.hi));
                const int x = static_cast<int>(rng.uniform_int(0, spec.width - w));
                const int y = static_cast<int>(rng.uniform_int(0, spec.height - h));
                const PixelBox cand{double(x), double(y), double(x + w), double(y + h)};
                bool ok = true;
                for (const auto& a : scene.annotations) {
                    if (!detail::separated(a.box, cand, sep)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    scene.annotations.push_back(Annotation{cand, o.class_id});
                    scene.raster.fill_rect(x, y, x + w, y + h, o.value);
                    break;
                }
                if (++rejected > budget)
                    throw Error(Errc::packing_failed,
                                "could not place " + std::to_string(total) + " objects after " +
                                    std::to_string(budget) + " retries");
            }
        }
    }
    return scene;
}

struct NoiseModel {
    double miss_rate = 0.0;
    double fp_per_megapixel = 0.0;
    double jitter_sigma = 0.0;
    DoubleRange score_tp{1.0, 1.0};
    DoubleRange score_fp{0.05, 0.5};
    IntRange fp_size{8, 24};
    int fp_class = -1;  ///< -1: pick among the annotated classes

    void validate() const {
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(miss_rate)) throw Error(Errc::invalid_argument, "miss_rate must be in [0,1]");
        if (!(fp_per_megapixel >= 0.0) || !(jitter_sigma >= 0.0))
            throw Error(Errc::invalid_argument, "fp rate and jitter must be >= 0");
        if (!(score_tp.lo > 0.0 && score_tp.lo <= score_tp.hi && score_tp.hi <= 1.0))
            throw Error(Errc::invalid_argument, "score_tp must be a range inside (0,1]");
        if (!(score_fp.lo > 0.0 && score_fp.lo <= score_fp.hi && score_fp.hi <= 1.0))
            throw Error(Errc::invalid_argument, "score_fp must be a range inside (0,1]");
        if (fp_size.lo < 1 || fp_size.hi < fp_size.lo)
            throw Error(Errc::invalid_argument, "fp_size range invalid");
    }

    [[nodiscard]] bool noise_free() const {
        return miss_rate == 0.0 && fp_per_megapixel == 0.0 && jitter_sigma == 0.0;
    }
};

/// Every annotation consumes the same number of draws whatever the noise
/// levels, so one seed lines up misses and scores across jitter settings.
inline std::vector<Region> simulate_detector(std::span<const Annotation> annotations,
                                             const NoiseModel& noise, std::uint64_t seed,
                                             int width, int height) {
    noise.validate();
    Xorshift64Star rng(seed);
    std::vector<Region> out;
    out.reserve(annotations.size());
    const double W = width, H = height;

    for (const auto& a : annotations) {
        const bool missed = rng.uniform() < noise.miss_rate;
        double j[4];
        for (double& v : j) v = rng.normal() * noise.jitter_sigma;
        const double score = rng.uniform(noise.score_tp.lo, noise.score_tp.hi);
        if (missed) continue;
        PixelBox b = a.box;
        if (noise.jitter_sigma > 0.0) {
            b = PixelBox{b.x1 + j[0], b.y1 + j[1], b.x2 + j[2], b.y2 + j[3]};
            if (b.x2 < b.x1) std::swap(b.x1, b.x2);
            if (b.y2 < b.y1) std::swap(b.y1, b.y2);
            b = clip(b, W, H);
            if (b.area() <= 0.0) continue;
        }
        out.push_back(Region{a.class_id, b, score});
    }

    const auto n_fp = rng.poisson(noise.fp_per_megapixel * W * H / 1e6);
    std::vector<int> classes;
    for (const auto& a : annotations)
        if (std::find(classes.begin(), classes.end(), a.class_id) == classes.end())
            classes.push_back(a.class_id);
    for (std::int64_t i = 0; i < n_fp; ++i) {
        const int w = std::min<int>(width, static_cast<int>(rng.uniform_int(noise.fp_size.lo, noise.fp_size.hi)));
        const int h = std::min<int>(height, static_cast<int>(rng.uniform_int(noise.fp_size.lo, noise.fp_size.hi)));
        const double x = rng.uniform(0.0, W - w);
        const double y = rng.uniform(0.0, H - h);
        const double score = rng.uniform(noise.score_fp.lo, noise.score_fp.hi);
        int cls = noise.fp_class;
        const auto pick = rng.uniform_int(0, std::max<std::int64_t>(0, std::ssize(classes) - 1));
        if (cls < 0) {
            if (classes.empty()) continue;
            cls = classes[static_cast<std::size_t>(pick)];
        }
        out.push_back(Region{cls, PixelBox{x, y, x + w, y + h}, score});
    }
    return out;
}

}  // namespace geocount
