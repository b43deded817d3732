#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "brute.hpp"
#include "expect_error.hpp"

using namespace rdelab;

namespace {
const double ln2 = std::log(2.0);
const double half_ln3 = 0.5 * std::log(3.0);
}  // namespace

TEST(Shannon, Examples) {
    EXPECT_DOUBLE_EQ(shannon({1.0, 0.0}), 0.0);
    EXPECT_NEAR(shannon({0.5, 0.5}), ln2, 1e-15);
    EXPECT_NEAR(shannon({0.75, 0.25}), 0.5623351446188083, 1e-12);
    EXPECT_ERROR_KIND(shannon({-0.1, 1.1}), ErrorKind::precondition);
}

TEST(MassTransfer, WorkedExample) {
    const auto r = lemma7_holds({0.3, 0.5}, {0.1, 0.1});
    ASSERT_TRUE(r.hypotheses_ok());
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.margin, 0.07938247483133898, 1e-12);
}

TEST(MassTransfer, HypothesesReportedByField) {
    EXPECT_FALSE(lemma7_holds({0.3, 0.5}, {0.0, 0.0}).hypotheses_ok());
    EXPECT_FALSE(lemma7_holds({0.5, 0.3}, {0.1, 0.1}).hypotheses_ok());
    EXPECT_FALSE(lemma7_holds({0.3, 0.5}, {0.1, 0.05}).hypotheses_ok());
    EXPECT_FALSE(lemma7_holds({0.6, 0.7}, {0.1, 0.1}).hypotheses_ok());
    const auto bad = lemma7_holds({0.3, 0.5}, {0.4, 0.4});
    EXPECT_FALSE(bad.holds);
    EXPECT_FALSE(bad.violations.empty());
}

TEST(CoverComplexity, Oracles) {
    const auto g = gm2();
    EXPECT_NEAR(cover_complexity(g.bundle, g.cover("zero_cyl"), 2), 1.2424533248940002, 1e-12);
    const auto f = full2();
    for (int n = 1; n <= 6; ++n) EXPECT_NEAR(cover_complexity(f.bundle, f.cover("zero_cyl"), n), n * ln2, 1e-12);
    const auto t = trivial_partition(g.bundle);
    for (int n = 1; n <= 4; ++n) EXPECT_EQ(cover_complexity(g.bundle, t, n), 0.0);
}

TEST(Htop, ExactAndCertified) {
    const auto g = gm2();
    const auto r = htop_estimate(g.bundle, g.cover("zero_cyl"), 12);
    ASSERT_TRUE(r.exact_rate);
    EXPECT_NEAR(*r.exact_rate, half_ln3, 1e-9);
    EXPECT_GE(r.certified_upper, *r.exact_rate);
    EXPECT_LE(r.certified_upper, 0.70);
    for (std::size_t i = 1; i < r.certified.size(); ++i) EXPECT_LE(r.certified[i], r.certified[i - 1]);
    const auto c = htop_estimate(g.bundle, g.cover("ab_b"), 3);
    EXPECT_FALSE(c.exact_rate);
    EXPECT_EQ(c.certified_upper, 0.0);
}

TEST(Htop, PartitionOnWiderWindow) {
    const auto g = gm2();
    const auto r = htop_estimate(g.bundle, cylinder_partition(g.bundle, {0, 2}), 4);
    ASSERT_TRUE(r.exact_rate);
    EXPECT_NEAR(*r.exact_rate, half_ln3, 1e-9);
}

TEST(CondEntropy, Gm2ExampleMeasure) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    EXPECT_NEAR(cond_entropy_partition(g.bundle, mu, g.cover("zero_cyl")), 0.6277411625893767, 1e-12);
    EXPECT_NEAR(markov_entropy_rate(g.bundle, mu), 0.5198603854199589, 1e-12);
    const auto r = h_partition_rate(g.bundle, mu, g.cover("zero_cyl"), 8);
    ASSERT_TRUE(r.exact_rate);
    EXPECT_NEAR(*r.exact_rate, 0.5198603854199589, 1e-12);
    EXPECT_GE(r.certified_upper, *r.exact_rate);
}

TEST(CondEntropy, FullElementShortCircuits) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    const auto r = cover_cond_entropy(g.bundle, mu, g.cover("ab_b"), CoverMode::general);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.exact);
}

TEST(CondEntropy, ModesAgreeOnPartitions) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    const auto z = range_join(g.bundle, g.cover("zero_cyl"), 0, 2);
    const double h = cond_entropy_partition(g.bundle, mu, z);
    EXPECT_NEAR(cover_cond_entropy(g.bundle, mu, z, CoverMode::general).value, h, 1e-12);
    EXPECT_NEAR(cover_cond_entropy(g.bundle, mu, z, CoverMode::product).value, h, 1e-12);
}

TEST(CondEntropy, GeneralNotAboveProduct) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    const auto u = make_product_cover(g.bundle, {0, 2}, {{{0, 0}, {0, 1}}, {{0, 1}, {1, 0}}, {{1, 0}, {1, 1}}});
    const auto gen = cover_cond_entropy(g.bundle, mu, u, CoverMode::general);
    const auto prod = cover_cond_entropy(g.bundle, mu, u, CoverMode::product);
    EXPECT_TRUE(gen.exact);
    EXPECT_TRUE(prod.complete);
    EXPECT_LE(gen.value, prod.value + 1e-12);
    ASSERT_TRUE(prod.argmin);
    EXPECT_NEAR(cond_entropy_partition(g.bundle, mu, *prod.argmin), prod.value, 1e-12);
}

TEST(CondEntropy, ProductGuardReportsPartialMinimum) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    const auto u = range_join(g.bundle, g.cover("ab_b"), 0, 3);
    EntropyLimits limits;
    limits.enum_max = 3;
    const auto r = cover_cond_entropy(g.bundle, mu, join(g.bundle, u, pullback(g.bundle, g.cover("zero_cyl"), 4)),
                                      CoverMode::product, limits);
    EXPECT_FALSE(r.complete);
    EXPECT_FALSE(r.exact);
    EXPECT_EQ(r.candidates, 3u);
}

// Minimum over every assignment of words to containing elements.
double brute_min_entropy(const std::vector<double>& mass, const std::vector<std::vector<int>>& in, std::size_t k) {
    const std::size_t n = mass.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> pick(n, 0);
    while (true) {
        std::vector<double> cell(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) cell[static_cast<std::size_t>(in[i][pick[i]])] += mass[i];
        best = std::min(best, shannon(cell));
        std::size_t i = 0;
        while (i < n && ++pick[i] == in[i].size()) pick[i++] = 0;
        if (i == n) break;
    }
    return best;
}

TEST(CondEntropy, GeneralSearchMatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 400; ++t) {
        const std::size_t n = 1 + rng() % 7, k = 1 + rng() % 5;
        std::vector<WordList> sections(k);
        std::map<Word, double> marginal;
        std::vector<double> mass;
        std::vector<std::vector<int>> in(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Word w = {static_cast<Symbol>(i)};
            const double m = 0.05 + std::uniform_real_distribution<double>(0, 1)(rng);
            mass.push_back(m);
            total += m;
            for (std::size_t e = 0; e < k; ++e)
                if (rng() % 2) in[i].push_back(static_cast<int>(e));
            if (in[i].empty()) in[i].push_back(static_cast<int>(rng() % k));
            for (int e : in[i]) sections[static_cast<std::size_t>(e)].push_back(w);
        }
        for (std::size_t i = 0; i < n; ++i) mass[i] /= total;
        for (std::size_t i = 0; i < n; ++i) marginal.emplace_hint(marginal.end(), Word(1, static_cast<Symbol>(i)), mass[i]);
        std::vector<const WordList*> ptrs;
        for (const auto& s : sections) ptrs.push_back(&s);
        const auto b = detail::min_fiber_entropy(marginal, ptrs, 200'000);
        ASSERT_TRUE(b.exact);
        EXPECT_NEAR(b.upper, brute_min_entropy(mass, in, k), 1e-12) << "case " << t;
        EXPECT_NEAR(b.lower, b.upper, 1e-12);
    }
}

TEST(CondEntropy, RequiresInvariantMeasure) {
    const auto g = gm2();
    auto mu = g.measure("example");
    mu.starts[0] = {0.9, 0.1};
    EXPECT_ERROR_KIND(h_minus_estimate(g.bundle, mu, g.cover("zero_cyl"), 2, CoverMode::general), ErrorKind::precondition);
}

TEST(HPlus, TwoRefinementsOfAbB) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    const auto h = h_plus_estimate(g.bundle, mu, g.cover("ab_b"), 4);
    EXPECT_EQ(h.candidates, 2u);
    EXPECT_TRUE(h.complete);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : product_partitions_finer(g.bundle, g.cover("ab_b")).collect())
        best = std::min(best, h_partition_rate(g.bundle, mu, p, 4).certified_upper);
    EXPECT_DOUBLE_EQ(h.value, best);
    const auto hm = h_minus_estimate(g.bundle, mu, g.cover("ab_b"), 4, CoverMode::general);
    EXPECT_LE(hm.certified_upper, h.value + 1e-12);
}

TEST(HPlus, PartitionEqualsPartitionRate) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    EXPECT_DOUBLE_EQ(h_plus_estimate(g.bundle, mu, g.cover("zero_cyl"), 5).value,
                     h_partition_rate(g.bundle, mu, g.cover("zero_cyl"), 5).certified_upper);
}

TEST(PowerSystem, BlockAlphabetsForM2) {
    const auto g = gm2();
    const auto ps = power_system(g.bundle, g.cover("zero_cyl"), 2);
    std::size_t a0 = 0, a1 = 0;
    for (std::size_t s = 0; s < ps.bundle.alphabet_size(); ++s) {
        a0 += ps.bundle.allowed(0, static_cast<Symbol>(s));
        a1 += ps.bundle.allowed(1, static_cast<Symbol>(s));
    }
    EXPECT_EQ(a0, 4u);
    EXPECT_EQ(a1, 3u);
    EXPECT_TRUE(validate(ps.bundle).ok());
    for (int k = 1; k <= 5; ++k)
        for (Fiber w = 0; w < 2; ++w) EXPECT_EQ(word_count(ps.bundle, w, k).value, word_count(g.bundle, w, 2 * k).value);
}

TEST(PowerSystem, IdentityAtM1) {
    const auto g = gm2();
    const auto ps = power_system(g.bundle, g.cover("zero_cyl"), 1);
    for (int k = 1; k <= 5; ++k)
        for (Fiber w = 0; w < 2; ++w) EXPECT_EQ(word_count(ps.bundle, w, k).value, word_count(g.bundle, w, k).value);
}

TEST(PowerSystem, FiniteNIdentity) {
    const auto g = gm2();
    const auto mu = g.measure("example");
    for (const char* name : {"zero_cyl", "ab_b"}) {
        const auto base = h_minus_estimate(g.bundle, mu, g.cover(name), 9, CoverMode::general);
        for (int M = 2; M <= 3; ++M) {
            const auto ps = power_system(g.bundle, g.cover(name), M);
            const auto pm = power_measure(g.bundle, mu, ps);
            EXPECT_LE(invariance_residual(ps.bundle, pm), invariance_tolerance);
            const auto r = h_minus_estimate(ps.bundle, pm, ps.cover, 3, CoverMode::general);
            for (int k = 1; k <= 3; ++k)
                EXPECT_NEAR(r.sequence[static_cast<std::size_t>(k - 1)].second / M,
                            base.sequence[static_cast<std::size_t>(k * M - 1)].second, 1e-9);
        }
    }
}

TEST(PowerSystem, BlockGuard) {
    const auto g = gm2();
    EXPECT_ERROR_KIND(power_system(g.bundle, g.cover("zero_cyl"), 4, 8), ErrorKind::guard);
}

TEST(CondEntropy, WiderWindowDoesNotLowerGeneralValue) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto inst = gen_instance(seed);
        const auto mu = inst.measure("m0");
        for (const char* name : {"zero_cyl", "prod", "fiber"}) {
            const auto& u = inst.cover(name);
            const auto wide = refine(inst.bundle, u, {0, u.window.end + 2});
            const auto a = cover_cond_entropy(inst.bundle, mu, u, CoverMode::general);
            const auto b = cover_cond_entropy(inst.bundle, mu, wide, CoverMode::general);
            ASSERT_TRUE(a.exact && b.exact);
            EXPECT_NEAR(a.value, b.value, 1e-12) << seed << " " << name;
        }
    }
}
