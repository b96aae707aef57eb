#pragma once

// Geographic and pixel geometry: boxes, IoU, meter-based expansion and the
// local equirectangular geo <-> pixel mapping.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>

#include "geocount/error.hpp"

namespace geocount {

/// Meters per degree of latitude on the spherical approximation used throughout.
inline constexpr double kMetersPerDegree = 111320.0;
inline constexpr double kMaxExpandLatitude = 89.9;

inline constexpr double deg2rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    [[nodiscard]] bool valid() const {
        return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
               lon >= -180.0 && lon <= 180.0;
    }
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct GeoBox {
    double min_lat = 0.0;
    double min_lon = 0.0;
    double max_lat = 0.0;
    double max_lon = 0.0;

    [[nodiscard]] bool valid() const { return min_lat <= max_lat && min_lon <= max_lon; }
    [[nodiscard]] double mid_lat() const { return 0.5 * (min_lat + max_lat); }
    [[nodiscard]] GeoPoint center() const {
        return {0.5 * (min_lat + max_lat), 0.5 * (min_lon + max_lon)};
    }
    [[nodiscard]] bool contains(const GeoBox& o) const {
        return o.min_lat >= min_lat && o.max_lat <= max_lat && o.min_lon >= min_lon &&
               o.max_lon <= max_lon;
    }
    [[nodiscard]] bool contains(const GeoPoint& p) const {
        return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
    }
    /// Closed-interval intersection: boxes sharing an edge intersect.
    [[nodiscard]] bool intersects(const GeoBox& o) const {
        return min_lat <= o.max_lat && o.min_lat <= max_lat && min_lon <= o.max_lon &&
               o.min_lon <= max_lon;
    }
    friend bool operator==(const GeoBox&, const GeoBox&) = default;
};

/// Axis-aligned box in continuous pixel coordinates, (x1,y1) top-left.
struct PixelBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    [[nodiscard]] double width() const { return x2 - x1; }
    [[nodiscard]] double height() const { return y2 - y1; }
    [[nodiscard]] double area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }
    [[nodiscard]] bool valid() const {
        return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
               x1 <= x2 && y1 <= y2;
    }
    [[nodiscard]] bool contains(const PixelBox& o) const {
        return o.x1 >= x1 && o.y1 >= y1 && o.x2 <= x2 && o.y2 <= y2;
    }
    friend bool operator==(const PixelBox&, const PixelBox&) = default;
    friend auto operator<=>(const PixelBox&, const PixelBox&) = default;
};

inline PixelBox intersection(const PixelBox& a, const PixelBox& b) {
    PixelBox r{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2),
               std::min(a.y2, b.y2)};
    if (r.x2 < r.x1) r.x2 = r.x1;
    if (r.y2 < r.y1) r.y2 = r.y1;
    return r;
}

inline PixelBox clip(const PixelBox& b, double width, double height) {
    return intersection(b, PixelBox{0.0, 0.0, width, height});
}

/// Intersection over union; 0 for disjoint boxes or a zero-area union.
inline double iou(const PixelBox& a, const PixelBox& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

/// Geo <-> pixel mapping anchored at the center of the top-left pixel.
struct GeoTransform {
    GeoPoint origin;
    double gsd_x = 0.3;
    double gsd_y = 0.3;

    [[nodiscard]] bool valid() const {
        return origin.valid() && std::isfinite(gsd_x) && std::isfinite(gsd_y) && gsd_x > 0.0 &&
               gsd_y > 0.0;
    }
};

inline GeoBox enclosing_geobox(std::span<const GeoPoint> points) {
    if (points.empty()) throw Error(Errc::empty_boundary, "no points to enclose");
    GeoBox box{points.front().lat, points.front().lon, points.front().lat, points.front().lon};
    for (const auto& p : points.subspan(1)) {
        box.min_lat = std::min(box.min_lat, p.lat);
        box.max_lat = std::max(box.max_lat, p.lat);
        box.min_lon = std::min(box.min_lon, p.lon);
        box.max_lon = std::max(box.max_lon, p.lon);
    }
    return box;
}

/// Grows the box by `meters` on every side, clamped to valid coordinates.
inline GeoBox expand_geobox(const GeoBox& box, double meters) {
    if (!(meters >= 0.0) || !std::isfinite(meters))
        throw Error(Errc::invalid_argument, "expansion must be a finite non-negative distance");
    const double mid = box.mid_lat();
    if (std::abs(mid) >= kMaxExpandLatitude)
        throw Error(Errc::polar_unsupported, "mid-latitude too close to a pole");
    const double dlat = meters / kMetersPerDegree;
    const double dlon = meters / (kMetersPerDegree * std::cos(deg2rad(mid)));
    return GeoBox{std::max(-90.0, box.min_lat - dlat), std::max(-180.0, box.min_lon - dlon),
                  std::min(90.0, box.max_lat + dlat), std::min(180.0, box.max_lon + dlon)};
}

inline std::pair<double, double> geo_to_pixel(const GeoTransform& t, const GeoPoint& p) {
    const double coslat = std::cos(deg2rad(t.origin.lat));
    const double x = (p.lon - t.origin.lon) * kMetersPerDegree * coslat / t.gsd_x;
    const double y = (t.origin.lat - p.lat) * kMetersPerDegree / t.gsd_y;
    return {x, y};
}

inline GeoPoint pixel_to_geo(const GeoTransform& t, double x, double y) {
    const double coslat = std::cos(deg2rad(t.origin.lat));
    return GeoPoint{t.origin.lat - y * t.gsd_y / kMetersPerDegree,
                    t.origin.lon + x * t.gsd_x / (kMetersPerDegree * coslat)};
}

/// Approximate ground distance in meters (equirectangular around the mean latitude).
inline double ground_distance_m(const GeoPoint& a, const GeoPoint& b) {
    const double coslat = std::cos(deg2rad(0.5 * (a.lat + b.lat)));
    const double dx = (b.lon - a.lon) * kMetersPerDegree * coslat;
    const double dy = (b.lat - a.lat) * kMetersPerDegree;
    return std::hypot(dx, dy);
}

}  // namespace geocount
