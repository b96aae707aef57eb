#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "geocount/geo.hpp"
#include "oracles.hpp"

using namespace geocount;

namespace {

void expect_box(const GeoBox& b, double a, double c, double d, double e, double tol = 1e-12) {
    EXPECT_NEAR(b.min_lat, a, tol);
    EXPECT_NEAR(b.min_lon, c, tol);
    EXPECT_NEAR(b.max_lat, d, tol);
    EXPECT_NEAR(b.max_lon, e, tol);
}

PixelBox random_box(std::mt19937_64& rng, double extent = 50.0) {
    std::uniform_real_distribution<double> pos(0.0, extent), size(0.0, extent / 2);
    const double x = pos(rng), y = pos(rng);
    return {x, y, x + size(rng), y + size(rng)};
}

}  // namespace

TEST(EnclosingGeobox, SinglePoint) {
    const std::vector<GeoPoint> pts{{0, 0}};
    expect_box(enclosing_geobox(pts), 0, 0, 0, 0);
}

TEST(EnclosingGeobox, ComponentwiseMinMax) {
    std::vector<GeoPoint> pts{{1, 2}, {3, -1}, {2, 5}};
    expect_box(enclosing_geobox(pts), 1, -1, 3, 5);
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.lon < b.lon; });
    do {
        expect_box(enclosing_geobox(pts), 1, -1, 3, 5);
    } while (std::next_permutation(pts.begin(), pts.end(),
                                   [](auto& a, auto& b) { return a.lon < b.lon; }));
}

TEST(EnclosingGeobox, EmptyThrows) {
    try {
        (void)enclosing_geobox(std::vector<GeoPoint>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::empty_boundary);
    }
}

TEST(ExpandGeobox, OneDegreeAtEquator) {
    expect_box(expand_geobox({0, 0, 0, 0}, 111320.0), -1, -1, 1, 1);
    expect_box(expand_geobox({0, 0, 0, 0}, 0.0), 0, 0, 0, 0);
}

TEST(ExpandGeobox, LongitudeDoublesAtSixtyDegrees) {
    const GeoBox b = expand_geobox({60, 10, 60, 10}, 500.0);
    const double dlat = b.max_lat - 60.0, dlon = b.max_lon - 10.0;
    EXPECT_NEAR(dlon, 2.0 * dlat, 1e-12);
    EXPECT_NEAR(dlat, 500.0 / 111320.0, 1e-12);
}

TEST(ExpandGeobox, PolarAndNegativeRejected) {
    try {
        (void)expand_geobox({89.95, 0, 89.95, 0}, 10.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::polar_unsupported);
    }
    EXPECT_THROW((void)expand_geobox({0, 0, 0, 0}, -1.0), Error);
}

TEST(ExpandGeobox, ClampsToValidRange) {
    const GeoBox b = expand_geobox({89.0, 179.9, 89.0, 179.9}, 200000.0);
    EXPECT_LE(b.max_lat, 90.0);
    EXPECT_LE(b.max_lon, 180.0);
}

TEST(ExpandGeobox, MonotoneInMeters) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-80, 80), lon(-170, 170), m(0, 5000);
    for (int i = 0; i < 500; ++i) {
        const double a = lat(rng), o = lon(rng);
        const GeoBox raw{a, o, a + 0.01, o + 0.02};
        double m1 = m(rng), m2 = m(rng);
        if (m1 > m2) std::swap(m1, m2);
        EXPECT_TRUE(expand_geobox(raw, m2).contains(expand_geobox(raw, m1)));
    }
}

TEST(GeoToPixel, OriginAndUnitStep) {
    const GeoTransform t{{0, 0}, 1.0, 1.0};
    auto [x0, y0] = geo_to_pixel(t, {0, 0});
    EXPECT_EQ(x0, 0.0);
    EXPECT_EQ(y0, 0.0);
    auto [x, y] = geo_to_pixel(t, {0, 1.0 / 111320.0});
    EXPECT_NEAR(x, 1.0, 1e-12);
    EXPECT_NEAR(y, 0.0, 1e-12);
}

TEST(GeoToPixel, RoundTripBelow85Degrees) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-85, 85), lon(-179, 179), off(-0.05, 0.05), gsd(0.1, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const GeoTransform t{{lat(rng), lon(rng)}, gsd(rng), gsd(rng)};
        const GeoPoint p{t.origin.lat + off(rng), t.origin.lon + off(rng)};
        auto [x, y] = geo_to_pixel(t, p);
        const GeoPoint q = pixel_to_geo(t, x, y);
        EXPECT_NEAR(q.lat, p.lat, 1e-9);
        EXPECT_NEAR(q.lon, p.lon, 1e-9);
    }
}

TEST(Iou, Basics) {
    const PixelBox a{0, 0, 2, 2};
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, {5, 5, 6, 6}), 0.0);
    EXPECT_EQ(iou(a, {2, 0, 4, 2}), 0.0);  // touching edges
    EXPECT_EQ(iou({1, 1, 1, 1}, {1, 1, 1, 1}), 0.0);
}

TEST(Iou, OneSeventhAgreesWithGridCount) {
    const PixelBox a{0, 0, 2, 2}, b{1, 1, 3, 3};
    EXPECT_NEAR(iou(a, b), 1.0 / 7.0, 1e-15);
    EXPECT_NEAR(oracle::grid_iou(a, b, 200), 1.0 / 7.0, 1e-12);
}

TEST(Iou, MatchesOracleSymmetricAndBounded) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 5000; ++i) {
        const PixelBox a = random_box(rng), b = random_box(rng);
        const double v = iou(a, b);
        EXPECT_NEAR(v, oracle::box_iou(a, b), 1e-12);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        if (a.area() > 0 && !(a == b)) {
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(Iou, IntegerBoxesMatchGridCount) {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> p(0, 12), s(1, 8);
    for (int i = 0; i < 200; ++i) {
        const double x = p(rng), y = p(rng), u = p(rng), v = p(rng);
        const PixelBox a{x, y, x + s(rng), y + s(rng)}, b{u, v, u + s(rng), v + s(rng)};
        EXPECT_NEAR(iou(a, b), oracle::grid_iou(a, b, 2), 1e-12);
    }
}

TEST(PixelBox, ClipAndIntersection) {
    const PixelBox b = clip({-5, 10, 50, 400}, 30, 300);
    EXPECT_EQ(b, (PixelBox{0, 10, 30, 300}));
    const PixelBox e = intersection({0, 0, 1, 1}, {5, 5, 6, 6});
    EXPECT_EQ(e.area(), 0.0);
}
