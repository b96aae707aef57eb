#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geocount/geo.hpp"

namespace geocount {

/// Row-major 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, std::uint8_t fill = 0)
        : width_(width), height_(height), channels_(channels) {
        check_dims(width, height, channels);
        pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }
    Raster(int width, int height, int channels, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
        check_dims(width, height, channels);
        if (pixels_.size() != static_cast<std::size_t>(width) * height * channels)
            throw Error(Errc::invalid_argument, "pixel buffer size does not match dimensions");
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }
    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    [[nodiscard]] std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const { return pixels_[index(x, y, c)]; }
    std::uint8_t& at(int x, int y, int c = 0) { return pixels_[index(x, y, c)]; }

    /// Paints the half-open rectangle [x1,x2) x [y1,y2), clipped to the raster.
    void fill_rect(int x1, int y1, int x2, int y2, std::uint8_t value) {
        x1 = std::clamp(x1, 0, width_);
        x2 = std::clamp(x2, 0, width_);
        y1 = std::clamp(y1, 0, height_);
        y2 = std::clamp(y2, 0, height_);
        for (int y = y1; y < y2; ++y)
            std::fill(pixels_.begin() + static_cast<std::ptrdiff_t>(index(x1, y)),
                      pixels_.begin() + static_cast<std::ptrdiff_t>(index(x2, y)), value);
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static void check_dims(int w, int h, int c) {
        if (w < 1 || h < 1) throw Error(Errc::invalid_argument, "raster dimensions must be >= 1");
        if (c != 1 && c != 3) throw Error(Errc::invalid_argument, "raster must have 1 or 3 channels");
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Integer pixel window, half-open: [x1, x2) x [y1, y2).
struct PixelWindow {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    [[nodiscard]] int width() const { return x2 - x1; }
    [[nodiscard]] int height() const { return y2 - y1; }
    friend bool operator==(const PixelWindow&, const PixelWindow&) = default;
};

struct RoiImage {
    std::string roi_id;
    std::string timestamp;
    Raster raster;
    GeoTransform transform;

    /// Key joining an image to its annotations and recorded detections.
    [[nodiscard]] std::string key() const {
        return timestamp.empty() ? roi_id : roi_id + "@" + timestamp;
    }
};

inline std::string image_key(const std::string& roi_id, const std::string& timestamp) {
    return timestamp.empty() ? roi_id : roi_id + "@" + timestamp;
}

/// Copies the window after clamping it to the raster bounds.
inline Raster crop(const Raster& r, PixelWindow box) {
    box.x1 = std::clamp(box.x1, 0, r.width());
    box.x2 = std::clamp(box.x2, 0, r.width());
    box.y1 = std::clamp(box.y1, 0, r.height());
    box.y2 = std::clamp(box.y2, 0, r.height());
    if (box.width() < 1 || box.height() < 1)
        throw Error(Errc::empty_crop, "crop window does not intersect the raster");
    Raster out(box.width(), box.height(), r.channels());
    const auto row_bytes = static_cast<std::size_t>(box.width()) * r.channels();
    for (int y = 0; y < box.height(); ++y) {
        const auto* src = r.pixels().data() + r.index(box.x1, box.y1 + y);
        std::copy_n(src, row_bytes, out.pixels().data() + out.index(0, y));
    }
    return out;
}

/// Places `r` at the top-left of a zero-filled width x height canvas.
inline Raster pad_to(const Raster& r, int width, int height) {
    if (r.width() == width && r.height() == height) return r;
    Raster out(width, height, r.channels());
    const int w = std::min(width, r.width());
    const auto row_bytes = static_cast<std::size_t>(w) * r.channels();
    for (int y = 0; y < std::min(height, r.height()); ++y)
        std::copy_n(r.pixels().data() + r.index(0, y), row_bytes, out.pixels().data() + out.index(0, y));
    return out;
}

/// Crop of a block x block window at (x, y), zero padded where it leaves the raster.
inline Raster extract_block(const Raster& r, int x, int y, int block) {
    PixelWindow win{x, y, x + block, y + block};
    Raster part = crop(r, win);
    return pad_to(part, block, block);
}

inline int scaled_dim(int dim, double scale) {
    return static_cast<int>(std::lround(static_cast<double>(dim) * scale));
}

/// Bilinear resampling with half-pixel-center alignment.
inline Raster resize(const Raster& r, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw Error(Errc::degenerate_resize, "scale must be positive");
    const int ow = scaled_dim(r.width(), scale);
    const int oh = scaled_dim(r.height(), scale);
    if (ow < 1 || oh < 1) throw Error(Errc::degenerate_resize, "output would be empty");
    if (ow == r.width() && oh == r.height()) return r;

    const int ch = r.channels();
    const double sx = static_cast<double>(r.width()) / ow;
    const double sy = static_cast<double>(r.height()) / oh;

    struct Tap {
        int i0, i1;
        double f;
    };
    auto taps = [](int out_n, int in_n, double s) {
        std::vector<Tap> t(static_cast<std::size_t>(out_n));
        for (int o = 0; o < out_n; ++o) {
            double src = (o + 0.5) * s - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, in_n - 1);
            t[static_cast<std::size_t>(o)] = Tap{i0, i1, src - i0};
        }
        return t;
    };
    const auto tx = taps(ow, r.width(), sx);
    const auto ty = taps(oh, r.height(), sy);

    Raster out(ow, oh, ch);
    auto src = r.pixels();
    auto dst = out.pixels();
    for (int y = 0; y < oh; ++y) {
        const auto& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < ow; ++x) {
            const auto& vx = tx[static_cast<std::size_t>(x)];
            for (int c = 0; c < ch; ++c) {
                const double p00 = src[r.index(vx.i0, vy.i0, c)];
                const double p10 = src[r.index(vx.i1, vy.i0, c)];
                const double p01 = src[r.index(vx.i0, vy.i1, c)];
                const double p11 = src[r.index(vx.i1, vy.i1, c)];
                const double top = p00 + (p10 - p00) * vx.f;
                const double bot = p01 + (p11 - p01) * vx.f;
                const double v = top + (bot - top) * vy.f;
                dst[out.index(x, y, c)] =
                    static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

/// Ratios within this band of 1 are treated as already at the target GSD.
inline constexpr double kUpsampleNoopBand = 0.01;
inline constexpr double kMaxUpsample = 8.0;

/// Scale that would bring `gsd` to `target_gsd`, or 1.0 inside the no-op band.
inline double gsd_scale(double gsd, double target_gsd) {
    if (!(gsd > 0.0) || !(target_gsd > 0.0))
        throw Error(Errc::invalid_argument, "GSD values must be positive");
    const double s = gsd / target_gsd;
    if (s > kMaxUpsample)
        throw Error(Errc::excessive_upsample,
                    "upsampling by " + std::to_string(s) + " exceeds the limit of 8");
    if (std::abs(s - 1.0) < kUpsampleNoopBand) return 1.0;
    return s;
}

struct UpsampleResult {
    RoiImage image;
    double applied_scale = 1.0;
};

/// Resamples the ROI so one pixel covers `target_gsd` meters.
inline UpsampleResult upsample_to_gsd(const RoiImage& img, double target_gsd) {
    const auto& t = img.transform;
    if (!t.valid()) throw Error(Errc::invalid_argument, "ROI transform is invalid");
    if (std::abs(t.gsd_x - t.gsd_y) > 1e-12)
        throw Error(Errc::invalid_argument, "upsampling requires square pixels");
    const double s = gsd_scale(t.gsd_x, target_gsd);
    UpsampleResult res{img, s};
    res.image.transform.gsd_x = target_gsd;
    res.image.transform.gsd_y = target_gsd;
    if (s == 1.0) return res;
    res.image.raster = resize(img.raster, s);
    // New top-left pixel center, expressed in the old pixel grid.
    const double sx = static_cast<double>(img.raster.width()) / res.image.raster.width();
    const double sy = static_cast<double>(img.raster.height()) / res.image.raster.height();
    res.image.transform.origin = pixel_to_geo(t, 0.5 * sx - 0.5, 0.5 * sy - 0.5);
    return res;
}

}  // namespace geocount
