#include <random>

#include <gtest/gtest.h>

#include "brute.hpp"
#include "expect_error.hpp"

using namespace rdelab;

TEST(Cover, ZeroCylinderIsPartition) {
    const auto g = gm2();
    const auto& z = g.cover("zero_cyl");
    EXPECT_TRUE(is_partition(z));
    EXPECT_TRUE(z.product_form);
    EXPECT_TRUE(check_cover(g.bundle, z).ok());
    EXPECT_FALSE(is_partition(g.cover("ab_b")));
    EXPECT_ERROR_KIND(as_partition(g.bundle, g.cover("ab_b")), ErrorKind::precondition);
}

TEST(Cover, MissingWordIsNotACover) {
    const auto g = gm2();
    const auto c = make_product_cover(g.bundle, {0, 1}, {{{0}}});
    EXPECT_FALSE(check_cover(g.bundle, c).ok());
}

TEST(Cover, RangeJoinIsCylinderPartition) {
    const auto g = gm2();
    for (int n = 1; n <= 5; ++n) {
        const auto j = range_join(g.bundle, g.cover("zero_cyl"), 0, n - 1);
        EXPECT_EQ(j.window, (Span{0, n}));
        EXPECT_TRUE(is_partition(j));
        for (Fiber w = 0; w < 2; ++w) {
            std::size_t nonempty = 0;
            for (std::size_t e = 0; e < j.size(); ++e) nonempty += !j.section(e, w).empty();
            EXPECT_EQ(nonempty, brute::words(g.bundle, w, n).size());
        }
    }
}

TEST(Cover, PullbackShiftsWindow) {
    const auto g = gm2();
    const auto p = pullback(g.bundle, g.cover("zero_cyl"), 2);
    EXPECT_EQ(p.window, (Span{2, 3}));
    EXPECT_TRUE(is_finer(g.bundle, range_join(g.bundle, g.cover("zero_cyl"), 0, 2), p));
}

TEST(Cover, JoinIsFinerThanBoth) {
    const auto g = gm2();
    const auto& u = g.cover("ab_b");
    const auto v = pullback(g.bundle, g.cover("zero_cyl"), 1);
    const auto j = join(g.bundle, u, v);
    EXPECT_TRUE(is_finer(g.bundle, j, u));
    EXPECT_TRUE(is_finer(g.bundle, j, v));
    EXPECT_FALSE(is_finer(g.bundle, u, g.cover("zero_cyl")));
}

TEST(Cover, ProductPartitionsOfAbB) {
    const auto g = gm2();
    auto it = product_partitions_finer(g.bundle, g.cover("ab_b"));
    EXPECT_EQ(it.count(), 2u);
    const auto all = it.collect();
    ASSERT_EQ(all.size(), 2u);
    for (const auto& p : all) {
        EXPECT_TRUE(is_partition(p));
        EXPECT_TRUE(is_finer(g.bundle, p, g.cover("ab_b")));
    }
    EXPECT_ERROR_KIND(product_partitions_finer(g.bundle, make_cover(g.bundle, {0, 1}, {{WordList{{0}, {1}}, WordList{}}, {WordList{{1}}, WordList{{0}, {1}}}})),
                      ErrorKind::precondition);
}

TEST(SetCover, ExactMatchesBruteForce) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        const std::size_t u = 1 + rng() % 12, k = 1 + rng() % 9;
        std::vector<Bitset> sets(k, Bitset(u));
        for (auto& s : sets)
            for (std::size_t i = 0; i < u; ++i)
                if (rng() % 3 == 0) s.set(i);
        for (std::size_t i = 0; i < u; ++i) sets[rng() % k].set(i);
        std::size_t best = k + 1;
        for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
            Bitset all(u);
            for (std::size_t j = 0; j < k; ++j)
                if (mask >> j & 1) all |= sets[j];
            if (all.count() == u) best = std::min<std::size_t>(best, std::popcount(mask));
        }
        const auto r = exact_set_cover(u, sets);
        EXPECT_EQ(r.size, best);
        EXPECT_EQ(r.chosen.size(), best);
        EXPECT_GE(greedy_set_cover(u, sets).size(), best);
    }
}

TEST(SetCover, Guards) {
    std::vector<Bitset> sets(2, Bitset(10));
    SetCoverLimits limits;
    limits.universe_max = 5;
    EXPECT_ERROR_KIND(exact_set_cover(10, sets, limits), ErrorKind::guard);
    sets[0].set(0);
    EXPECT_ERROR_KIND(exact_set_cover(10, sets), ErrorKind::precondition);
}

TEST(SetCover, CoverCountsOnGm2) {
    const auto g = gm2();
    EXPECT_EQ(cover_count(g.bundle, 0, g.cover("zero_cyl"), 4), 12u);
    EXPECT_EQ(cover_count(g.bundle, 1, g.cover("zero_cyl"), 4), 9u);
    EXPECT_EQ(cover_count(g.bundle, 0, g.cover("ab_b"), 3), 1u);
    EXPECT_EQ(global_min_subcover(g.bundle, g.cover("ab_b")).size, 1u);
    EXPECT_EQ(global_min_subcover(g.bundle, g.cover("zero_cyl")).size, 2u);
}

TEST(SetCover, SeparatedSetIsMaximal) {
    const auto g = gm2();
    const std::vector<PositionedPartition> parts = {as_partition(g.bundle, g.cover("zero_cyl"))};
    for (int n = 1; n <= 3; ++n)
        for (Fiber w = 0; w < 2; ++w) {
            const auto sep = maximal_multi_separated(g.bundle, w, parts, g.cover("zero_cyl"), n);
            EXPECT_EQ(sep.words.size(), brute::words(g.bundle, w, n).size());
            EXPECT_EQ(sep.bound, sep.cover_count);
        }
}
