#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "myomap/error.hpp"
#include "myomap/preprocess.hpp"

using namespace myomap;
using namespace myomap::preprocess;

namespace {

PixelGrid ramp(std::size_t rows, std::size_t cols, double spacing) {
    PixelGrid g(rows, cols, {spacing, spacing});
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.values[i] = static_cast<double>(i);
    }
    return g;
}

// Closest-rank linear interpolation written out independently.
double brute_percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q / 100.0;
    const auto i = static_cast<std::size_t>(h);
    return i + 1 < v.size() ? v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]) : v.back();
}

}  // namespace

TEST(Resample, SameSpacingIsIdentity) {
    const auto g = ramp(5, 7, 1.0);
    const auto out = resample(g, 1.0, Interpolation::Bilinear);
    EXPECT_EQ(out, g);
}

TEST(Resample, TwoByTwoUpsampledByHand) {
    PixelGrid g(2, 2, {2.0, 2.0});
    g.values = {0, 10, 10, 20};
    const auto out = resample(g, 1.0, Interpolation::Bilinear);
    ASSERT_EQ(out.rows, 4u);
    ASSERT_EQ(out.cols, 4u);
    // Output pixel i samples source index (i + 0.5) / 2 - 0.5, clamped: 0, 0.25, 0.75, 1.
    const double pos[] = {0.0, 0.25, 0.75, 1.0};
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_NEAR(out.at(r, c), 10.0 * (pos[r] + pos[c]), 1e-12) << r << "," << c;
        }
    }
    EXPECT_DOUBLE_EQ(out.at(1, 1), 5.0);
    EXPECT_DOUBLE_EQ(out.at(1, 2), 10.0);
    EXPECT_DOUBLE_EQ(out.at(2, 1), 10.0);
    EXPECT_DOUBLE_EQ(out.at(2, 2), 15.0);
}

TEST(Resample, BilinearStaysWithinInputRange) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(800, 1400);
    PixelGrid g(13, 9, {1.37, 1.37});
    for (auto& v : g.values) {
        v = u(gen);
    }
    for (double target : {0.5, 0.9, 1.0, 2.3}) {
        const auto out = resample(g, target, Interpolation::Bilinear);
        EXPECT_GE(*std::min_element(out.values.begin(), out.values.end()),
                  *std::min_element(g.values.begin(), g.values.end()));
        EXPECT_LE(*std::max_element(out.values.begin(), out.values.end()),
                  *std::max_element(g.values.begin(), g.values.end()));
        EXPECT_EQ(out.rows, static_cast<std::size_t>(std::lround(13 * 1.37 / target)));
    }
}

TEST(Resample, NearestMaskKeepsLabelAlphabet) {
    LabelMask m("gt", 7, 6, {1.8, 1.8});
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        m.labels[i] = static_cast<std::uint8_t>(i % 3);
    }
    const auto out = resample(m, 0.7);
    const std::set<std::uint8_t> seen(out.labels.begin(), out.labels.end());
    for (auto l : seen) {
        EXPECT_LE(l, 2);
    }
    EXPECT_EQ(out.spacing_mm, (Spacing{0.7, 0.7}));
}

TEST(Resample, NonPositiveSpacingRejected) {
    try {
        resample(ramp(2, 2, 1.0), 0.0, Interpolation::Bilinear);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadSpacing);
    }
}

TEST(Normalize, ConstantGridIsDegenerate) {
    const auto r = normalize_percentile(PixelGrid(4, 4, {1, 1}, 500.0), 1, 99);
    EXPECT_TRUE(r.degenerate);
    for (double v : r.grid.values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Normalize, OneToHundredAgainstBrutePercentile) {
    PixelGrid g(10, 10, {1, 1});
    for (std::size_t i = 0; i < 100; ++i) {
        g.values[i] = static_cast<double>(i + 1);
    }
    const auto r = normalize_percentile(g, 1, 99);
    const double lo = brute_percentile(g.values, 1);
    const double hi = brute_percentile(g.values, 99);
    EXPECT_NEAR(r.low, lo, 1e-12);
    EXPECT_NEAR(r.high, hi, 1e-12);
    EXPECT_NEAR(lo, 1.99, 1e-12);
    EXPECT_NEAR(hi, 99.01, 1e-12);
    EXPECT_EQ(r.grid.values[0], 0.0);   // 1 is below P1
    EXPECT_EQ(r.grid.values[99], 1.0);  // 100 is above P99
    for (std::size_t i = 1; i < 99; ++i) {
        EXPECT_NEAR(r.grid.values[i], (g.values[i] - lo) / (hi - lo), 1e-12);
    }
    for (std::size_t i = 1; i < 100; ++i) {
        EXPECT_LE(r.grid.values[i - 1], r.grid.values[i]);
    }
}

TEST(Normalize, OutputInUnitIntervalAndMonotone) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> n(1000, 80);
    PixelGrid g(20, 20, {1, 1});
    for (auto& v : g.values) {
        v = n(gen);
    }
    const auto r = normalize_percentile(g, 1, 99);
    for (std::size_t i = 0; i < g.size(); ++i) {
        ASSERT_GE(r.grid.values[i], 0.0);
        ASSERT_LE(r.grid.values[i], 1.0);
        for (std::size_t j = 0; j < g.size(); j += 7) {
            if (g.values[i] <= g.values[j]) {
                ASSERT_LE(r.grid.values[i], r.grid.values[j]);
            }
        }
    }
}

TEST(CenterCrop, MatchingSizeIsIdentity) {
    const auto g = ramp(288, 288, 1.0);
    EXPECT_EQ(center_crop(g, 288.0, 0.0), g);
}

TEST(CenterCrop, LargerInputOffsetBySix) {
    const auto g = ramp(300, 300, 1.0);
    const auto out = center_crop(g, 288.0, 0.0);
    ASSERT_EQ(out.rows, 288u);
    EXPECT_EQ(out.at(0, 0), g.at(6, 6));
    EXPECT_EQ(out.at(287, 287), g.at(293, 293));
}

TEST(CenterCrop, SmallerInputPaddedBy44) {
    PixelGrid g(200, 200, {1, 1}, 7.0);
    const auto out = center_crop(g, 288.0, -1.0);
    ASSERT_EQ(out.rows, 288u);
    ASSERT_EQ(out.cols, 288u);
    for (std::size_t r = 0; r < 288; ++r) {
        for (std::size_t c = 0; c < 288; ++c) {
            const bool inside = r >= 44 && r < 244 && c >= 44 && c < 244;
            ASSERT_EQ(out.at(r, c), inside ? 7.0 : -1.0) << r << "," << c;
        }
    }
    LabelMask m("gt", 200, 200, {1, 1});
    std::fill(m.labels.begin(), m.labels.end(), label::kMyocardium);
    const auto mc = center_crop(m, 288.0);
    EXPECT_EQ(mc.at(0, 0), label::kBackground);
    EXPECT_EQ(mc.at(44, 44), label::kMyocardium);
    EXPECT_EQ(mc.count(label::kMyocardium), 200u * 200u);
}

TEST(CenterCrop, NonPositiveSizeRejected) {
    try {
        center_crop(ramp(4, 4, 1.0), 0.0, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadSize);
    }
}

namespace {

Augmented sample_pair(std::size_t n) {
    PixelGrid g(n, n, {1, 1});
    LabelMask m("gt", n, n, {1, 1});
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.values[i] = static_cast<double>((i * 37) % 101) / 100.0;
        m.labels[i] = static_cast<std::uint8_t>((i / 5) % 3);
    }
    return {g, m};
}

}  // namespace

TEST(Augment, IdentityConfigReturnsInput) {
    const auto in = sample_pair(9);
    const auto out = augment(in.map, in.mask, AugmentConfig::identity(), 1234);
    EXPECT_EQ(out.map, in.map);
    EXPECT_EQ(out.mask, in.mask);
}

TEST(Augment, HorizontalFlipTwiceRestores) {
    auto cfg = AugmentConfig::identity();
    cfg.flip_horizontal_prob = 1.0;
    const auto in = sample_pair(8);
    const auto once = augment(in.map, in.mask, cfg, 1);
    EXPECT_NE(once.map, in.map);
    EXPECT_EQ(once.map.at(2, 0), in.map.at(2, 7));
    const auto twice = augment(once.map, once.mask, cfg, 2);
    EXPECT_EQ(twice.map, in.map);
    EXPECT_EQ(twice.mask, in.mask);
}

TEST(Augment, QuarterTurnIsIndexPermutation) {
    auto cfg = AugmentConfig::identity();
    cfg.rotation_min_deg = cfg.rotation_max_deg = 90.0;
    const std::size_t n = 10;
    const auto in = sample_pair(n);
    const auto out = augment(in.map, in.mask, cfg, 77);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            ASSERT_EQ(out.map.at(r, c), in.map.at(c, n - 1 - r));
            ASSERT_EQ(out.mask.at(r, c), in.mask.at(c, n - 1 - r));
        }
    }
}

TEST(Augment, FixedSeedIsReproducibleAndIntensityContractHolds) {
    const auto in = sample_pair(16);
    const AugmentConfig cfg;
    const auto a = augment(in.map, in.mask, cfg, 42);
    const auto b = augment(in.map, in.mask, cfg, 42);
    EXPECT_EQ(a.map, b.map);
    EXPECT_EQ(a.mask, b.mask);
    for (double v : a.map.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    const auto c = augment(in.map, in.mask, cfg, 43);
    EXPECT_NE(a.map, c.map);
}

TEST(Augment, MyocardiumPreimageLiesInInputMyocardium) {
    // Solid square of myocardium; small rotations and shifts only move it.
    PixelGrid g(32, 32, {1, 1}, 0.5);
    LabelMask m("gt", 32, 32, {1, 1});
    for (std::size_t r = 10; r < 22; ++r) {
        for (std::size_t c = 8; c < 20; ++c) {
            m.at(r, c) = label::kMyocardium;
        }
    }
    AugmentConfig cfg = AugmentConfig::identity();
    cfg.translation_min_mm = cfg.translation_max_mm = 3.0;
    const auto out = augment(g, m, cfg, 5);
    for (std::size_t r = 0; r < 32; ++r) {
        for (std::size_t c = 0; c < 32; ++c) {
            if (out.mask.at(r, c) == label::kMyocardium) {
                ASSERT_EQ(m.at(r - 3, c - 3), label::kMyocardium);
            }
        }
    }
    EXPECT_EQ(out.mask.count(label::kMyocardium), m.count(label::kMyocardium));
}

TEST(PreprocessMap, ChainProducesCropSizedUnitGrid) {
    MapEntry e;
    e.map.map_id = "x";
    e.map.grid = PixelGrid(40, 40, {2.0, 2.0});
    for (std::size_t i = 0; i < e.map.grid.size(); ++i) {
        e.map.grid.values[i] = 900.0 + static_cast<double>(i % 17);
    }
    LabelMask m("gt", 40, 40, {2.0, 2.0});
    m.at(20, 20) = label::kMyocardium;
    e.masks.push_back(m);
    PreprocessConfig cfg;
    cfg.crop_size_mm = 64.0;
    const auto out = preprocess_map(e, cfg);
    EXPECT_EQ(out.map.rows, 64u);
    EXPECT_EQ(out.map.spacing_mm, (Spacing{1.0, 1.0}));
    ASSERT_EQ(out.masks.size(), 1u);
    EXPECT_EQ(out.masks[0].rows, 64u);
    EXPECT_EQ(out.masks[0].count(label::kMyocardium), 4u);
    EXPECT_FALSE(out.degenerate);
}
