#include <cmath>

#include <gtest/gtest.h>

#include "brute.hpp"
#include "expect_error.hpp"

using namespace rdelab;

TEST(ProbBase, CyclesAndPowers) {
    ProbBase b({"a", "b", "c"}, {0.25, 0.25, 0.5}, {1, 0, 2});
    EXPECT_EQ(b.cycles().size(), 2u);
    EXPECT_EQ(b.theta_pow(0, 3), 1u);
    EXPECT_EQ(b.theta_pow(0, -1), 1u);
    EXPECT_EQ(b.theta_pow(2, 7), 2u);
    EXPECT_TRUE(validate(b).ok());
}

TEST(ProbBase, ShapeErrors) {
    EXPECT_ERROR_KIND(ProbBase({"a"}, {0.5, 0.5}, {0}), ErrorKind::precondition);
    EXPECT_ERROR_KIND(ProbBase({"a", "b"}, {0.5, 0.5}, {0, 2}), ErrorKind::precondition);
}

TEST(ProbBase, ValidateReportsInvariantViolations) {
    EXPECT_FALSE(validate(ProbBase({"a", "b"}, {0.3, 0.7}, {1, 0})).ok());
    EXPECT_FALSE(validate(ProbBase({"a", "b"}, {0.5, 0.5}, {0, 0})).ok());
    EXPECT_FALSE(validate(ProbBase({"a", "b"}, {0.5, 0.6}, {0, 1})).ok());
}

TEST(Bundle, DeadSymbolNamesTheRow) {
    SymbolicBundle b(ProbBase({"w0", "w1"}, {0.5, 0.5}, {1, 0}), {"a", "b"},
                     {Matrix<std::uint8_t>{{1, 1}, {1, 1}}, Matrix<std::uint8_t>{{1, 1}, {0, 0}}});
    const auto d = validate(b);
    ASSERT_FALSE(d.ok());
    EXPECT_NE(d.issues.front().find("row 'b'"), std::string::npos);
    EXPECT_ERROR_KIND(require_valid(b), ErrorKind::precondition);
}

TEST(Bundle, AdjacencyShapeChecked) {
    EXPECT_ERROR_KIND(SymbolicBundle(ProbBase({"w"}, {1.0}, {0}), {"a", "b"}, {Matrix<std::uint8_t>{{1}}}),
                      ErrorKind::precondition);
}

TEST(WordCount, Gm2Oracle) {
    const auto g = gm2();
    const std::vector<std::pair<unsigned, unsigned>> want = {{4, 3},    {6, 6},    {12, 9},   {18, 18},
                                                             {36, 27},  {54, 54},  {108, 81}, {162, 162},
                                                             {324, 243}, {486, 486}, {972, 729}};
    for (int n = 2; n <= 12; ++n) {
        const auto& [a, b] = want[static_cast<std::size_t>(n - 2)];
        EXPECT_EQ(word_count(g.bundle, 0, n).value, a) << n;
        EXPECT_EQ(word_count(g.bundle, 1, n).value, b) << n;
    }
}

TEST(WordCount, MatchesBruteForceAndEnumeration) {
    const auto g = gm2();
    for (int n = 1; n <= 9; ++n)
        for (Fiber w = 0; w < 2; ++w) {
            const auto brute = brute::words(g.bundle, w, n);
            EXPECT_EQ(word_count(g.bundle, w, n).value, brute.size());
            EXPECT_EQ(admissible_words(g.bundle, w, {0, n}), brute);
        }
}

TEST(WordCount, SpanShiftsTheFiber) {
    const auto g = gm2();
    EXPECT_EQ(admissible_words(g.bundle, 0, {1, 3}), brute::words(g.bundle, 1, 2));
    EXPECT_TRUE(is_admissible(g.bundle, 0, {0, 3}, {1, 1, 0}));
    EXPECT_FALSE(is_admissible(g.bundle, 1, {0, 3}, {1, 1, 0}));
}

TEST(WordCount, LogDomainBeyond128Bits) {
    const auto f = full2();
    const auto c = word_count(f.bundle, 0, 200);
    EXPECT_FALSE(c.exact);
    EXPECT_NEAR(c.log_value, 200 * std::log(2.0), 1e-9);
}

TEST(Spectral, GoldenMean) {
    const auto r = spectral_radius(Matrix<double>{{1, 1}, {1, 0}});
    EXPECT_NEAR(r.radius, (1 + std::sqrt(5.0)) / 2, 1e-10);
}

TEST(Spectral, ReducibleTakesLargestBlock) {
    const auto r = spectral_radius(Matrix<double>{{1, 1, 0}, {0, 2, 1}, {0, 0, 1}});
    EXPECT_NEAR(r.radius, 2.0, 1e-10);
    EXPECT_NEAR(spectral_radius(Matrix<double>{{0, 1}, {0, 0}}).radius, 0.0, 1e-12);
}

TEST(GrowthRate, Instances) {
    EXPECT_NEAR(cycle_growth_rate(gm2().bundle).integrated, 0.5 * std::log(3.0), 1e-9);
    EXPECT_NEAR(cycle_growth_rate(full2().bundle).integrated, std::log(2.0), 1e-9);
    EXPECT_NEAR(cycle_growth_rate(id2().bundle).integrated, 0.0, 1e-9);
}
