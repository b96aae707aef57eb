#include <gtest/gtest.h>

#include <cmath>

#include "geocount/classes.hpp"
#include "geocount/random.hpp"
#include "geocount/synth.hpp"

using namespace geocount;

namespace {

int car() { return ClassRegistry::xview().id("small-car"); }

SceneSpec cars(int n, int sep = 2) {
    SceneSpec s;
    s.min_separation = sep;
    s.objects.push_back({car(), {n, n}, {10, 18}, {6, 12}, 200});
    return s;
}

std::vector<Annotation> grid_annotations(int n) {
    std::vector<Annotation> a;
    for (int i = 0; i < n; ++i) {
        const double x = (i % 40) * 20.0, y = (i / 40) * 20.0;
        a.push_back({{x, y, x + 12, y + 8}, car()});
    }
    return a;
}

}  // namespace

TEST(Prng, KnownAnswers) {
    // Reference values computed independently from the documented recurrences.
    Xorshift64Star a(0);
    EXPECT_EQ(a.next(), 0x7bbcb40d550682d0ULL);
    EXPECT_EQ(a.next(), 0xde7fe413d00cc9fdULL);
    EXPECT_EQ(a.next(), 0xb3c638353c668c91ULL);
    Xorshift64Star b(42);
    EXPECT_EQ(b.next(), 0x31b0ece7c4f697a2ULL);
    EXPECT_EQ(b.next(), 0x9008a3b1cb686f03ULL);
    EXPECT_EQ(b.next(), 0x7c7173abd97be16fULL);
}

TEST(Prng, DistributionsLookRight) {
    Xorshift64Star r(7);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = r.normal();
        sum += v;
        sq += v * v;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
    long long total = 0;
    for (int i = 0; i < 20000; ++i) total += r.poisson(3.2);
    EXPECT_NEAR(static_cast<double>(total) / 20000, 3.2, 0.05);
    for (int i = 0; i < 1000; ++i) {
        const auto k = r.uniform_int(-2, 2);
        EXPECT_GE(k, -2);
        EXPECT_LE(k, 2);
    }
    EXPECT_EQ(r.uniform(0.4, 0.4), 0.4);
}

TEST(GenerateScene, EmptyCountsGiveBlankRaster) {
    const Scene s = generate_scene(1, cars(0));
    EXPECT_TRUE(s.annotations.empty());
    EXPECT_EQ(s.raster, Raster(800, 800, 3, std::uint8_t{64}));
}

TEST(GenerateScene, Deterministic) {
    const Scene a = generate_scene(99, cars(60));
    const Scene b = generate_scene(99, cars(60));
    EXPECT_EQ(a.raster, b.raster);
    ASSERT_EQ(a.annotations.size(), b.annotations.size());
    for (std::size_t i = 0; i < a.annotations.size(); ++i) EXPECT_EQ(a.annotations[i].box, b.annotations[i].box);
    EXPECT_FALSE(generate_scene(100, cars(60)).raster == a.raster);
}

TEST(GenerateScene, SeparationAndExactBounds) {
    const int sep = 4;
    const Scene s = generate_scene(5, cars(25, sep));
    ASSERT_EQ(s.annotations.size(), 25u);
    for (std::size_t i = 0; i < s.annotations.size(); ++i) {
        const auto& a = s.annotations[i].box;
        for (std::size_t j = i + 1; j < s.annotations.size(); ++j) {
            const auto& b = s.annotations[j].box;
            const double gx = std::max(b.x1 - a.x2, a.x1 - b.x2), gy = std::max(b.y1 - a.y2, a.y1 - b.y2);
            EXPECT_GE(std::max(gx, gy), sep);
        }
        // Filled inside, background just outside on every side that exists.
        const int x1 = int(a.x1), y1 = int(a.y1), x2 = int(a.x2), y2 = int(a.y2);
        EXPECT_EQ(s.raster.at(x1, y1), 200);
        EXPECT_EQ(s.raster.at(x2 - 1, y2 - 1), 200);
        if (x1 > 0) {
            EXPECT_EQ(s.raster.at(x1 - 1, y1), 64);
        }
        if (y2 < 800) {
            EXPECT_EQ(s.raster.at(x1, y2), 64);
        }
        EXPECT_GE(a.x1, 0);
        EXPECT_LE(a.x2, 800);
    }
}

TEST(GenerateScene, CountRangeAndMultipleClasses) {
    SceneSpec s = cars(0);
    s.objects[0].count = {110, 140};
    s.objects.push_back({ClassRegistry::xview().id("truck"), {3, 3}, {30, 40}, {12, 16}, 150});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Scene sc = generate_scene(seed, s);
        std::size_t n_car = 0, n_truck = 0;
        for (const auto& a : sc.annotations) (a.class_id == car() ? n_car : n_truck)++;
        EXPECT_GE(n_car, 110u);
        EXPECT_LE(n_car, 140u);
        EXPECT_EQ(n_truck, 3u);
    }
}

TEST(GenerateScene, PackingFailure) {
    SceneSpec s;
    s.width = s.height = 50;
    s.objects.push_back({car(), {20, 20}, {20, 20}, {20, 20}, 200});
    try {
        (void)generate_scene(1, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::packing_failed);
    }
}

TEST(GenerateScene, SpecValidation) {
    SceneSpec s = cars(1);
    s.objects[0].width = {900, 900};
    EXPECT_THROW((void)generate_scene(1, s), Error);
    s = cars(1);
    s.objects[0].count = {-1, 2};
    EXPECT_THROW((void)generate_scene(1, s), Error);
}

TEST(SimulateDetector, NoiseFreeIsIdentity) {
    const auto anns = grid_annotations(50);
    const auto out = simulate_detector(anns, NoiseModel{}, 3, 800, 800);
    ASSERT_EQ(out.size(), anns.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].box, anns[i].box);
        EXPECT_EQ(out[i].class_id, anns[i].class_id);
        EXPECT_EQ(out[i].score, 1.0);
    }
}

TEST(SimulateDetector, AllMissedLeavesOnlyFalsePositives) {
    NoiseModel n;
    n.miss_rate = 1.0;
    n.fp_per_megapixel = 20.0;
    const auto out = simulate_detector(grid_annotations(50), n, 4, 800, 800);
    EXPECT_FALSE(out.empty());
    for (const auto& r : out) {
        EXPECT_GE(r.score, n.score_fp.lo);
        EXPECT_LE(r.score, n.score_fp.hi);
        EXPECT_GE(r.box.x1, 0.0);
        EXPECT_LE(r.box.x2, 800.0);
    }
}

TEST(SimulateDetector, MissRateBinomialBound) {
    NoiseModel n;
    n.miss_rate = 0.2;
    const auto anns = grid_annotations(1000);
    double total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        total += static_cast<double>(simulate_detector(anns, n, mix_seed(11, seed), 800, 1000).size());
    const double mean = total / 100;
    const double sigma_mean = std::sqrt(1000 * 0.2 * 0.8) / std::sqrt(100.0);
    EXPECT_LT(std::abs(mean - 800.0), 3 * sigma_mean) << mean;
}

TEST(SimulateDetector, FalsePositiveRateIsPoisson) {
    NoiseModel n;
    n.miss_rate = 1.0;
    n.fp_per_megapixel = 5.0;
    const auto anns = grid_annotations(1);
    double total = 0;
    const int runs = 2000;
    for (int s = 0; s < runs; ++s) total += static_cast<double>(simulate_detector(anns, n, s, 800, 800).size());
    const double lambda = 5.0 * 0.64;
    EXPECT_LT(std::abs(total / runs - lambda), 3 * std::sqrt(lambda / runs));
}

TEST(SimulateDetector, JitterIsZeroMeanWithConfiguredSpread) {
    NoiseModel n;
    n.jitter_sigma = 1.5;
    std::vector<Annotation> anns;
    for (int i = 0; i < 400; ++i) {
        const double x = 100 + (i % 20) * 30.0, y = 100 + (i / 20) * 30.0;
        anns.push_back({{x, y, x + 15, y + 10}, car()});
    }
    double sum = 0, sq = 0;
    std::size_t k = 0;
    for (int s = 0; s < 20; ++s) {
        const auto out = simulate_detector(anns, n, s, 1000, 1000);
        ASSERT_EQ(out.size(), anns.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i].box.x1 - anns[i].box.x1;
            sum += d;
            sq += d * d;
            ++k;
        }
    }
    EXPECT_NEAR(sum / k, 0.0, 0.05);
    EXPECT_NEAR(std::sqrt(sq / k), 1.5, 0.05);
}

TEST(SimulateDetector, DeterministicAndAligned) {
    NoiseModel n;
    n.miss_rate = 0.3;
    n.jitter_sigma = 2.0;
    n.fp_per_megapixel = 3.0;
    n.score_tp = {0.3, 1.0};
    const auto anns = grid_annotations(200);
    const auto a = simulate_detector(anns, n, 17, 800, 800);
    const auto b = simulate_detector(anns, n, 17, 800, 800);
    EXPECT_EQ(a, b);
    // Same seed, no jitter: the same annotations survive with the same scores
    // and the false positives are identical.
    NoiseModel calm = n;
    calm.jitter_sigma = 0.0;
    const auto c = simulate_detector(anns, calm, 17, 800, 800);
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].score, c[i].score);
        EXPECT_NEAR(a[i].box.x1, c[i].box.x1, 10.0);
    }
    EXPECT_EQ(a.back(), c.back());
}

TEST(NoiseModel, Validation) {
    NoiseModel n;
    n.miss_rate = 1.5;
    EXPECT_THROW(n.validate(), Error);
    n = NoiseModel{};
    n.score_fp = {0.0, 0.5};
    EXPECT_THROW(n.validate(), Error);
    n = NoiseModel{};
    n.jitter_sigma = -1;
    EXPECT_THROW(n.validate(), Error);
}
