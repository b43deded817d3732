#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include <rdelab.hpp>

using namespace rdelab;

TEST(Simplex, Projection) {
    const auto p = detail::project_simplex({0.8, 0.6, -0.2});
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-15);
    EXPECT_NEAR(p[0], 0.6, 1e-12);
    EXPECT_NEAR(p[1], 0.4, 1e-12);
    EXPECT_EQ(p[2], 0.0);
}

TEST(Maximize, Gm2ReachesHtop) {
    const auto g = gm2();
    const auto r = maximize_partition_entropy(g.bundle, g.cover("zero_cyl"), {});
    EXPECT_EQ(r.objective, "markov-chain-rule");
    EXPECT_NEAR(r.htop, 0.5 * std::log(3.0), 1e-9);
    EXPECT_GE(r.value, r.htop - 0.05);
    EXPECT_LE(r.max_seen, r.htop + 1e-9);
    EXPECT_EQ(r.above_htop, 0u);
    EXPECT_EQ(r.evaluations, 2000u);
}

TEST(Maximize, Deterministic) {
    const auto f = full2();
    MaximizeOptions opt;
    opt.budget = 300;
    opt.seed = 5;
    const auto a = maximize_partition_entropy(f.bundle, f.cover("zero_cyl"), opt);
    const auto b = maximize_partition_entropy(f.bundle, f.cover("zero_cyl"), opt);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.best.transitions, b.best.transitions);
    EXPECT_GE(a.value, std::log(2.0) - 0.02);
}

TEST(Maximize, CoverObjective) {
    const auto g = gm2();
    MaximizeOptions opt;
    opt.budget = 50;
    opt.nmax = 2;
    const auto r = maximize_partition_entropy(g.bundle, g.cover("ab_b"), opt);
    EXPECT_EQ(r.objective, "h-minus-fekete");
    EXPECT_EQ(r.value, 0.0);
}
