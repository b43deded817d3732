#include <cmath>

#include <gtest/gtest.h>

#include "brute.hpp"
#include "expect_error.hpp"

using namespace rdelab;

TEST(Measure, StationaryStartsAreInvariant) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    EXPECT_LE(invariance_residual(g.bundle, mu), invariance_tolerance);
    EXPECT_NEAR(mu.starts[0][0], 0.75, 1e-12);
    EXPECT_NEAR(mu.starts[1][0], 0.5, 1e-12);
}

TEST(Measure, TransitionSupportChecked) {
    const auto g = gm2();
    EXPECT_ERROR_KIND(make_markov(g.bundle, {Matrix<double>{{0.5, 0.5}, {0.5, 0.5}}, Matrix<double>{{0.5, 0.5}, {0.5, 0.5}}}),
                      ErrorKind::precondition);
    EXPECT_ERROR_KIND(make_markov(g.bundle, {Matrix<double>{{0.5, 0.4}, {0.5, 0.5}}, Matrix<double>{{0.5, 0.5}, {1, 0}}}),
                      ErrorKind::precondition);
}

TEST(Measure, ReducibleCycleFlagged) {
    const auto i = id2();
    const auto st = stationary_starts(i.bundle, {Matrix<double>{{1, 0}, {0, 1}}});
    ASSERT_EQ(st.non_unique.size(), 1u);
    EXPECT_TRUE(st.non_unique[0]);
}

TEST(Measure, WordLawSumsToOne) {
    const auto g = gm2();
    const auto nu = markov_to_word(g.bundle, g.measure("example"), 5);
    for (Fiber w = 0; w < 2; ++w) {
        double total = 0.0;
        for (const auto& [word, p] : nu.fibers[w]) {
            total += p;
            EXPECT_TRUE(is_admissible(g.bundle, w, {0, 5}, word));
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Measure, InvariantMeasureIsFixedByPushforward) {
    const auto g = gm2();
    const auto nu = markov_to_word(g.bundle, g.measure("example"), 6);
    EXPECT_LE(max_weight_difference(truncate(pushforward(g.bundle, nu), 5), truncate(nu, 5)), 1e-12);
}

TEST(Measure, PushforwardMovesMassToThetaFiber) {
    const auto g = gm2();
    const auto nu = equidistribution(3, {{{0, 0, 0}}, {{1, 0, 1}}});
    const auto p = pushforward(g.bundle, nu);
    EXPECT_EQ(p.horizon, 2);
    EXPECT_DOUBLE_EQ(p.fibers[1].at({0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(p.fibers[0].at({0, 1}), 1.0);
}

TEST(Measure, MixAndEquidistribution) {
    const auto a = equidistribution(2, {{{0, 0}, {0, 1}}});
    const auto b = equidistribution(2, {{{1, 0}}});
    const auto m = mix({a, b}, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(m.fibers[0].at({0, 0}), 0.25);
    EXPECT_DOUBLE_EQ(m.fibers[0].at({1, 0}), 0.5);
    EXPECT_ERROR_KIND(mix({a, b}, {0.5, 0.6}), ErrorKind::precondition);
}
