#include <gtest/gtest.h>

#include <random>

#include "mammoeval/seg_metrics.hpp"
#include "oracles.hpp"

using namespace mammoeval;

namespace {

// 4x4 with pred class 1 at (0,0),(0,1) and gt class 1 at (0,1),(0,2), (x, y).
std::pair<LabelMask, LabelMask> hand_case() {
    LabelMask p(4, 4), g(4, 4);
    p.at(0, 0) = 1;
    p.at(0, 1) = 1;
    g.at(0, 1) = 1;
    g.at(0, 2) = 1;
    return {p, g};
}

}  // namespace

TEST(Confusion, HandCase) {
    auto [p, g] = hand_case();
    const auto c = confusion_counts(p, g, 1);
    EXPECT_EQ(c.tp, 1u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.tn, 13u);
}

TEST(Confusion, IdentityHasNoErrors) {
    std::mt19937_64 eng(3);
    const auto m = oracle::random_mask(eng, 7, 5, 5);
    const auto c = confusion_counts(m, m, 2);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
}

TEST(Confusion, AllBackgroundPrediction) {
    LabelMask p(3, 3), g(3, 3);
    g[0] = g[4] = g[8] = 1;
    const auto c = confusion_counts(p, g, 1);
    EXPECT_EQ(c.tp, 0u);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 3u);
}

TEST(Confusion, ShapeMismatchThrows) {
    EXPECT_THROW(confusion_counts(LabelMask(2, 3), LabelMask(3, 2), 1), InputError);
    EXPECT_THROW(error_map(LabelMask(2, 3), LabelMask(3, 2), 1), InputError);
}

TEST(Overlap, HandCaseValues) {
    const auto m = overlap_metrics({1, 1, 1, 13});
    EXPECT_DOUBLE_EQ(*m.iou, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(*m.dice, 0.5);
    EXPECT_DOUBLE_EQ(*m.specificity, 13.0 / 14.0);
    EXPECT_DOUBLE_EQ(*m.f1, *m.dice);
}

TEST(Overlap, PerfectAndDisjoint) {
    const auto m = overlap_metrics({5, 0, 0, 11});
    for (auto v : {m.iou, m.dice, m.precision, m.sensitivity, m.specificity, m.f1}) EXPECT_EQ(*v, 1.0);
    const auto d = overlap_metrics({0, 2, 3, 11});
    EXPECT_EQ(*d.iou, 0.0);
    EXPECT_EQ(*d.dice, 0.0);
}

TEST(Overlap, ZeroDenominatorIsUndefined) {
    const auto m = overlap_metrics({0, 0, 0, 16});
    EXPECT_FALSE(m.iou);
    EXPECT_FALSE(m.dice);
    EXPECT_FALSE(m.precision);
    EXPECT_FALSE(m.sensitivity);
    EXPECT_EQ(*m.specificity, 1.0);
    EXPECT_FALSE(overlap_metrics({0, 0, 0, 0}).specificity);
}

TEST(Surface, IdenticalMasksAreZero) {
    std::mt19937_64 eng(5);
    const auto m = oracle::random_blobs(eng, 9, 9, 1, 3);
    const auto s = surface_distances(m, m, 1);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->hd, 0.0);
    EXPECT_EQ(s->asd, 0.0);
}

TEST(Surface, SinglePixels345) {
    LabelMask p(6, 6), g(6, 6);
    p.at(0, 0) = 1;
    g.at(3, 4) = 1;
    const auto s = surface_distances(p, g, 1);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->hd, 5.0);
    EXPECT_EQ(s->asd, 5.0);
}

TEST(Surface, ShiftedBlockMatchesPairwiseOracle) {
    LabelMask p(5, 5), g(5, 5);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) {
            p.at(x, y) = 1;
            g.at(x + 1, y) = 1;
        }
    const auto s = surface_distances(p, g, 1);
    const auto o = oracle::surface(p, g, 1);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->hd, o.hd);
    EXPECT_NEAR(s->asd, o.asd, 1e-12);
}

TEST(Surface, UndefinedWhenClassMissing) {
    LabelMask p(4, 4), g(4, 4);
    g[5] = 1;
    EXPECT_FALSE(surface_distances(p, g, 1));
    EXPECT_FALSE(surface_distances(g, p, 1));
}

TEST(Surface, BorderCountsAsOutside) {
    const LabelMask full(4, 3, 1);
    const auto b = boundary_pixels(full, 1);
    std::size_t n = 0;
    for (bool v : b) n += v;
    EXPECT_EQ(n, 10u);  // every pixel but the two interior ones
}

TEST(Surface, ExhaustiveOracleOnSmallMasks) {
    std::mt19937_64 eng(11);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t w = 1 + trial % 8, h = 1 + (trial / 8) % 8;
        const auto p = oracle::random_mask(eng, w, h, 2, 0.3 + 0.05 * (trial % 9));
        const auto g = oracle::random_mask(eng, w, h, 2, 0.5);
        const auto s = surface_distances(p, g, 1);
        const auto o = oracle::surface(p, g, 1);
        ASSERT_EQ(s.has_value(), o.defined);
        if (s) {
            EXPECT_EQ(s->hd, o.hd);
            EXPECT_NEAR(s->asd, o.asd, 1e-9);
        }
        for (double d : {1.0, 1.5, 2.0, 3.0}) {
            double expected = 0;
            const bool defined = oracle::band_iou(p, g, 1, d, expected);
            const auto b = boundary_iou(p, g, 1, d);
            ASSERT_EQ(b.has_value(), defined);
            if (b) {
                EXPECT_EQ(*b, expected);
            }
        }
    }
}

TEST(Surface, Symmetric) {
    std::mt19937_64 eng(12);
    for (int t = 0; t < 50; ++t) {
        const auto a = oracle::random_blobs(eng, 12, 10, 1, 2);
        const auto b = oracle::random_blobs(eng, 12, 10, 1, 2);
        const auto ab = surface_distances(a, b, 1), ba = surface_distances(b, a, 1);
        ASSERT_TRUE(ab && ba);
        EXPECT_EQ(ab->hd, ba->hd);
        EXPECT_NEAR(ab->asd, ba->asd, 1e-12);
    }
}

TEST(BoundaryIou, IdentityAndDisjoint) {
    std::mt19937_64 eng(13);
    const auto m = oracle::random_blobs(eng, 10, 10, 1, 2);
    EXPECT_EQ(*boundary_iou(m, m, 1), 1.0);
    LabelMask a(12, 12), b(12, 12);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) {
            a.at(x, y) = 1;
            b.at(x + 8, y + 8) = 1;
        }
    EXPECT_EQ(*boundary_iou(a, b, 1, 2.0), 0.0);
    EXPECT_FALSE(boundary_iou(LabelMask(4, 4), LabelMask(4, 4), 1));
}

TEST(BoundaryIou, SixBySixHandCaseMatchesBandOracle) {
    // pred: 5x5 block at origin; gt: 4x4 block offset by one.
    LabelMask p(6, 6), g(6, 6);
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) p.at(x, y) = 1;
    for (std::size_t y = 1; y < 5; ++y)
        for (std::size_t x = 1; x < 5; ++x) g.at(x, y) = 1;
    double expected = 0;
    ASSERT_TRUE(oracle::band_iou(p, g, 1, 2.0, expected));
    EXPECT_EQ(*boundary_iou(p, g, 1, 2.0), expected);
    // At d = 2 both blocks are band throughout (the pred centre sits exactly
    // 2 px from its ring), so the gt block is the intersection.
    EXPECT_EQ(expected, 16.0 / 25.0);
}

TEST(BoundaryIou, RejectsBandBelowOnePixel) {
    EXPECT_THROW(boundary_iou(LabelMask(2, 2), LabelMask(2, 2), 1, 0.5), InputError);
}

TEST(Volume, Examples) {
    LabelMask p(10, 10), g(10, 10);
    for (std::size_t i = 0; i < 90; ++i) p[i] = 1;
    for (std::size_t i = 0; i < 100; ++i) g[i] = 1;
    auto v = volume_difference(p, g, 1);
    EXPECT_NEAR(v->rvd, -0.10, 1e-15);
    EXPECT_NEAR(v->ravd, 0.10, 1e-15);
    v = volume_difference(g, g, 1);
    EXPECT_EQ(v->rvd, 0.0);
    EXPECT_EQ(v->ravd, 0.0);
    LabelMask g50(10, 10);
    for (std::size_t i = 0; i < 50; ++i) g50[i] = 1;
    v = volume_difference(LabelMask(10, 10), g50, 1);
    EXPECT_EQ(v->rvd, -1.0);
    EXPECT_EQ(v->ravd, 1.0);
    EXPECT_FALSE(volume_difference(g50, LabelMask(10, 10), 1));
}

TEST(Volume, AntisymmetryRelation) {
    std::mt19937_64 eng(17);
    for (int t = 0; t < 100; ++t) {
        const auto a = oracle::random_mask(eng, 8, 8, 2, 0.4), b = oracle::random_mask(eng, 8, 8, 2, 0.6);
        const auto ab = volume_difference(a, b, 1), ba = volume_difference(b, a, 1);
        ASSERT_TRUE(ab && ba);
        const double na = static_cast<double>(a.count(1)), nb = static_cast<double>(b.count(1));
        EXPECT_NEAR(ab->rvd, -ba->rvd * na / nb, 1e-12);
    }
}

TEST(ErrorMapTest, HandCaseCoordinates) {
    auto [p, g] = hand_case();
    const auto e = error_map(p, g, 1);
    EXPECT_EQ(e.at(0, 0), ErrorCategory::FP);
    EXPECT_EQ(e.at(0, 1), ErrorCategory::TP);
    EXPECT_EQ(e.at(0, 2), ErrorCategory::FN);
    const auto c = e.counts();
    EXPECT_EQ(c.tp, 1u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.fn, 1u);
    const auto rgb = e.to_rgb();
    EXPECT_EQ(rgb[0], 255);                  // FP red
    EXPECT_EQ(rgb[3 * 4 + 1], 255);          // TP green at (0,1)
    EXPECT_EQ(rgb[3 * 8 + 2], 255);          // FN blue at (0,2)
}

TEST(ErrorMapTest, AllBackgroundPredictionMarksGtAsFn) {
    std::mt19937_64 eng(19);
    const auto g = oracle::random_mask(eng, 8, 8, 2);
    const auto e = error_map(LabelMask(8, 8), g, 1);
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_EQ(e.cells()[i] == ErrorCategory::FN, g[i] == 1);
}

TEST(Properties, RandomMasksAgreeWithOracle) {
    std::mt19937_64 eng(23);
    for (int t = 0; t < 200; ++t) {
        const auto p = oracle::random_mask(eng, 16, 16, 5), g = oracle::random_mask(eng, 16, 16, 5);
        for (ClassIndex k = 1; k < 5; ++k) {
            const auto c = confusion_counts(p, g, k);
            const auto o = oracle::confusion(p, g, k);
            EXPECT_EQ(c.tp, o.tp);
            EXPECT_EQ(c.fp, o.fp);
            EXPECT_EQ(c.fn, o.fn);
            EXPECT_EQ(c.tn, o.tn);
            EXPECT_EQ(c.total(), 256u);
            const auto e = error_map(p, g, k).counts();
            EXPECT_EQ(e.tp, c.tp);
            EXPECT_EQ(e.fp, c.fp);
            EXPECT_EQ(e.fn, c.fn);
            EXPECT_EQ(e.tn, c.tn);
            const auto m = overlap_metrics(c);
            if (m.iou) {
                EXPECT_NEAR(*m.dice, 2 * *m.iou / (1 + *m.iou), 4e-16);
            }
            const auto mt = overlap_metrics(confusion_counts(p.transposed(), g.transposed(), k));
            EXPECT_EQ(m.iou, mt.iou);
            EXPECT_EQ(m.dice, mt.dice);
            EXPECT_EQ(m.precision, mt.precision);
            EXPECT_EQ(m.sensitivity, mt.sensitivity);
            EXPECT_EQ(m.specificity, mt.specificity);
        }
    }
}

TEST(Properties, MetricRanges) {
    std::mt19937_64 eng(29);
    for (int t = 0; t < 50; ++t) {
        const auto p = oracle::random_mask(eng, 10, 10, 3), g = oracle::random_mask(eng, 10, 10, 3);
        for (const auto& s : evaluate_image("x", p, g, 1)) {
            if (!s.value) continue;
            switch (s.metric) {
                case MetricName::RVD: break;
                case MetricName::Hausdorff:
                case MetricName::AverageSurfaceDistance:
                case MetricName::RAVD: EXPECT_GE(*s.value, 0.0); break;
                default:
                    EXPECT_GE(*s.value, 0.0);
                    EXPECT_LE(*s.value, 1.0);
            }
        }
    }
}

TEST(EvaluateImage, OneSamplePerMetric) {
    auto [p, g] = hand_case();
    const auto s = evaluate_image("img", p, g, 1);
    ASSERT_EQ(s.size(), kAllMetrics.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].metric, kAllMetrics[i]);
        EXPECT_EQ(s[i].class_index, 1);
        EXPECT_EQ(s[i].image_id, "img");
    }
}

TEST(Aggregate, TwoPointSd) {
    const std::vector<MetricSample> s = {{"a", 1, MetricName::IoU, 0.5}, {"b", 1, MetricName::IoU, 0.7}};
    const auto a = aggregate_per_class(s);
    EXPECT_NEAR(a.at(1).mean, 0.6, 1e-15);
    EXPECT_NEAR(*a.at(1).sd, 0.1414213562, 1e-9);
    EXPECT_EQ(a.at(1).n, 2u);
}

TEST(Aggregate, SingleSampleHasNoSd) {
    const auto a = aggregate_per_class({{"a", 2, MetricName::Dice, 0.9}});
    EXPECT_EQ(a.at(2).n, 1u);
    EXPECT_FALSE(a.at(2).sd);
}

TEST(Aggregate, UndefinedSamplesUnderPolicy) {
    const std::vector<MetricSample> s = {{"a", 3, MetricName::IoU, std::nullopt},
                                         {"b", 3, MetricName::IoU, std::nullopt},
                                         {"c", 1, MetricName::IoU, 0.4}};
    const auto skip = aggregate_per_class(s, EmptyMaskPolicy::Skip);
    EXPECT_FALSE(skip.count(3));
    const auto zero = aggregate_per_class(s, EmptyMaskPolicy::CountAsZero);
    EXPECT_EQ(zero.at(3).n, 2u);
    EXPECT_EQ(zero.at(3).mean, 0.0);
}

TEST(Aggregate, OrderIndependentAndRejectsMixedMetrics) {
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<MetricSample> s;
    for (int i = 0; i < 40; ++i) s.push_back({"img" + std::to_string(i), 1 + i % 3, MetricName::IoU, u(eng)});
    const auto a = aggregate_per_class(s);
    std::shuffle(s.begin(), s.end(), eng);
    const auto b = aggregate_per_class(s);
    for (const auto& [k, v] : a) {
        EXPECT_EQ(v.mean, b.at(k).mean);
        EXPECT_EQ(v.sd, b.at(k).sd);
    }
    s.push_back({"x", 1, MetricName::Dice, 0.1});
    EXPECT_THROW(aggregate_per_class(s), InputError);
}

TEST(Pooled, SumsCountsBeforeRatios) {
    const auto m = pooled_overlap_metrics({{1, 1, 1, 13}, {3, 0, 1, 12}});
    EXPECT_DOUBLE_EQ(*m.iou, 4.0 / 7.0);
}
