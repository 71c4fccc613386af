#include <gtest/gtest.h>

#include "mammoeval/core.hpp"

using namespace mammoeval;

TEST(ValidateMask, AcceptsInRangeLabels) {
    const ClassMap cmap({{0, "bg", {}}, {1, "a", {}}, {2, "b", {}}, {3, "c", {}}});
    EXPECT_TRUE(validate_mask(LabelMask(2, 2, {0, 1, 2, 3}), cmap).empty());
}

TEST(ValidateMask, ReportsOutOfRangeLabelWithCell) {
    const ClassMap cmap({{0, "bg", {}}, {1, "a", {}}, {2, "b", {}}, {3, "c", {}}});
    const auto v = validate_mask(LabelMask(2, 2, {0, 1, 2, 7}), cmap);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, MaskViolation::Kind::LabelOutOfRange);
    EXPECT_EQ(v[0].cell, 3u);
    EXPECT_EQ(v[0].label, 7);
}

TEST(ValidateMask, ReportsSizeMismatch) {
    const auto v = validate_mask(LabelMask(3, 3, std::vector<ClassIndex>(8, 0)), ClassMap::mammography());
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v[0].kind, MaskViolation::Kind::SizeMismatch);
}

TEST(ValidateMask, ReportsEveryViolation) {
    const auto v = validate_mask(LabelMask(2, 2, {9, 0, 9, 9}), ClassMap::mammography());
    EXPECT_EQ(v.size(), 3u);
    EXPECT_THROW(require_valid(LabelMask(2, 2, {9, 0, 9, 9}), ClassMap::mammography(), "m"), InputError);
}

TEST(ClassMap, CanonicalTaxonomy) {
    const auto c = ClassMap::mammography();
    ASSERT_EQ(c.omega(), 5u);
    EXPECT_EQ(c.name(0), "background");
    EXPECT_EQ(c.name(1), "tissue");
    EXPECT_EQ(c.name(2), "axilla findings");
    EXPECT_EQ(c.name(3), "mass");
    EXPECT_EQ(c.name(4), "calcification");
}

TEST(ClassMap, NameIndexRoundTrip) {
    const auto c = ClassMap::mammography();
    for (const auto& e : c.entries()) EXPECT_EQ(c.name(*c.index(e.name)), e.name);
    EXPECT_FALSE(c.index("nope").has_value());
    for (const auto& e : c.entries()) EXPECT_EQ(*c.index_of_color(e.color), e.index);
}

TEST(ClassMap, RejectsGapsAndDuplicates) {
    EXPECT_THROW(ClassMap({{0, "bg", {}}, {2, "a", {}}}), InputError);
    EXPECT_THROW(ClassMap({{0, "bg", {}}, {1, "bg", {}}}), InputError);
    EXPECT_THROW(ClassMap(std::vector<ClassEntry>{}), InputError);
}

TEST(ClassMap, SortsEntriesByIndex) {
    const ClassMap c({{1, "a", {}}, {0, "bg", {}}});
    EXPECT_EQ(c.name(0), "bg");
}

TEST(LabelMask, TransposeAndCount) {
    const LabelMask m(3, 2, {0, 1, 2, 3, 4, 1});
    const auto t = m.transposed();
    EXPECT_EQ(t.width(), 2u);
    EXPECT_EQ(t.height(), 3u);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 3; ++x) EXPECT_EQ(t.at(y, x), m.at(x, y));
    EXPECT_EQ(m.count(1), 2u);
    EXPECT_EQ(t.transposed(), m);
}

TEST(TabularSchema, DeclaredCardinalities) {
    const auto s = TabularSchema::mammography();
    const std::vector<std::size_t> expected = {2, 4, 4, 4, 2, 2, 2, 4, 4, 6};
    ASSERT_EQ(s.features().size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(s.features()[i].categories.size(), expected[i]);
}

TEST(TabularRecord, ValidationChecksCardinality) {
    const auto s = TabularSchema::mammography();
    EXPECT_NO_THROW(validate_record({"x", {{"birads", 5}}}, s));
    EXPECT_THROW(validate_record({"x", {{"birads", 6}}}, s), InputError);
    EXPECT_THROW(validate_record({"x", {{"mass_presence", -1}}}, s), InputError);
    EXPECT_THROW(validate_record({"x", {{"unknown", 0}}}, s), InputError);
}

TEST(Tensor, ShapeProductMustMatch) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), InputError);
    const Tensor t({2, 3}, std::vector<double>(6, 1.0));
    EXPECT_EQ(t.channels(), 3u);
    EXPECT_EQ(t.positions(), 2u);
    EXPECT_EQ(shape_string(t.shape()), "2x3");
}

TEST(MetricName, StableNames) {
    EXPECT_STREQ(to_string(MetricName::BoundaryIoU), "boundary_iou");
    EXPECT_STREQ(to_string(MetricName::Hausdorff), "hd");
}
