#include <cmath>

#include <gtest/gtest.h>

#include "expect_error.hpp"

#include <rdelab.hpp>

using namespace rdelab;

TEST(Witness, Gm2AtN2) {
    const auto g = gm2();
    const auto w = misiurewicz_witness(g.bundle, g.cover("zero_cyl"), 2);
    EXPECT_EQ(w.horizon, 8);
    EXPECT_EQ(w.mixed_horizon, 3);
    ASSERT_EQ(w.fibers.size(), 2u);
    EXPECT_EQ(w.fibers[0].words.size(), 12u);
    EXPECT_EQ(w.fibers[1].words.size(), 9u);
    EXPECT_EQ(w.fibers[0].full_count, 36u);
    EXPECT_EQ(w.fibers[1].full_count, 27u);
    EXPECT_EQ(w.fiber_bounds.size(), 6u);
    EXPECT_EQ(w.average_bounds.size(), 2u);
    EXPECT_TRUE(w.all_hold());
    for (const auto& b : w.fiber_bounds) EXPECT_NEAR(b.lhs, b.lhs_pushed, 1e-12);
}

TEST(Witness, AtN1) {
    const auto g = gm2();
    const auto w = misiurewicz_witness(g.bundle, g.cover("zero_cyl"), 1);
    EXPECT_TRUE(w.all_hold());
    EXPECT_EQ(w.fibers[0].words.size(), 2u);
}

TEST(Witness, CoverWithFullElement) {
    const auto g = gm2();
    const auto w = misiurewicz_witness(g.bundle, g.cover("ab_b"), 2);
    EXPECT_TRUE(w.all_hold());
    EXPECT_EQ(w.partitions.size(), 2u);
}

TEST(Witness, LogFloor) {
    EXPECT_EQ(log_floor(0.9), -std::numeric_limits<double>::infinity());
    EXPECT_DOUBLE_EQ(log_floor(4.5), std::log(4.0));
}

TEST(Witness, Preconditions) {
    const auto g = gm2();
    EXPECT_ERROR_KIND(misiurewicz_witness(g.bundle, g.cover("zero_cyl"), 4), ErrorKind::guard);
    const auto per = make_cover(g.bundle, {0, 1}, {{WordList{{0}}, WordList{{0}, {1}}}, {WordList{{1}}, WordList{}}});
    EXPECT_ERROR_KIND(misiurewicz_witness(g.bundle, per, 1), ErrorKind::precondition);
}
