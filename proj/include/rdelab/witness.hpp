#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rdelab/entropy.hpp"

namespace rdelab {

struct WitnessLimits {
    int horizon_max = 16;
    EntropyLimits entropy;
};

/// One instance of the per-fiber bound
/// H(nu_w on (R_l)_i^{i+n^2+n-1}) >= ln[N'/n] >= ln[N(w, U, n^2+n) / (n d^n)].
struct FiberBound {
    Fiber fiber = 0;
    int shift = 0;          ///< i
    std::size_t partition = 0;  ///< l (0-based)
    double lhs = 0.0;
    double lhs_pushed = 0.0;    ///< same entropy computed on Theta^i nu at fiber theta^i w
    double middle = 0.0;        ///< ln floor(N' / n)
    double rhs = 0.0;           ///< ln floor(N / (n d^n))
    bool holds = false;
};

/// H_{mu_n}((R_l)_0^{m-1} | F) >= average over i of H_{Theta^i nu_n}(...) >= rhs.
struct AverageBound {
    std::size_t partition = 0;
    int m = 0;
    double lhs = 0.0;
    double middle = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

struct WitnessFiber {
    WordList words;                 ///< C_n(w)
    std::size_t pulled_count = 0;   ///< N(T, w, (Theta^n)^{-1} U, n^2)
    std::size_t full_count = 0;     ///< N(T, w, U, n^2 + n)
    std::size_t bound = 0;          ///< floor(pulled_count / K)
};

struct Witness {
    int n = 0;
    std::size_t cover_size = 0;     ///< d
    std::vector<PositionedPartition> partitions;
    int horizon = 0;                ///< of nu_n
    int mixed_horizon = 0;          ///< of mu_n
    std::vector<WitnessFiber> fibers;
    WordMeasure nu;
    WordMeasure mu;
    std::vector<FiberBound> fiber_bounds;
    std::vector<AverageBound> average_bounds;

    bool all_hold() const {
        for (const auto& b : fiber_bounds)
            if (!b.holds) return false;
        for (const auto& b : average_bounds)
            if (!b.holds) return false;
        return true;
    }
};

/// ln of floor(x), with ln 0 = -inf.
inline double log_floor(double x) {
    const double f = std::floor(x);
    return f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
}

/// The measures nu_n, mu_n built from maximal separated sets, together with every
/// finite instance of the two inequalities that bound their entropies from below.
///
/// nu_n lives on [0, n^2 + 2n + m - 1) so that (R_l)_i^{i+n^2+n-1} fits for every
/// i <= n; mu_n averages Theta^i nu_n for i < n^2 + n on the common horizon n + m.
inline Witness misiurewicz_witness(const SymbolicBundle& bundle, const PositionedCover& u, int n,
                                   std::optional<std::vector<PositionedPartition>> partitions = std::nullopt,
                                   const WitnessLimits& limits = {}) {
    require(n >= 1, "misiurewicz_witness: n must be >= 1");
    require(u.product_form, "misiurewicz_witness: cover is not product-form");
    require(u.window.begin == 0, "misiurewicz_witness: cover window must start at 0");
    const int m = u.window.length();
    const int steps = n * n + n;
    const int horizon = n * n + 2 * n + m - 1;
    if (horizon > limits.horizon_max)
        fail(ErrorKind::guard, "misiurewicz_witness: horizon " + std::to_string(horizon) + " exceeds the limit of " +
                                   std::to_string(limits.horizon_max));

    Witness out;
    out.n = n;
    out.cover_size = u.size();
    out.horizon = horizon;
    if (partitions) {
        out.partitions = std::move(*partitions);
    } else {
        auto it = product_partitions_finer(bundle, u);
        while (out.partitions.size() < static_cast<std::size_t>(n)) {
            auto p = it.next();
            if (!p) break;
            out.partitions.push_back(std::move(*p));
        }
    }
    require(!out.partitions.empty(), "misiurewicz_witness: partition list is empty");
    const auto& base = bundle.base();
    const auto& el = limits.entropy;
    const double d = static_cast<double>(u.size());

    std::vector<PositionedPartition> pulled;
    for (const auto& r : out.partitions) pulled.push_back(as_partition(bundle, pullback(bundle, r, n)));
    const auto u_pulled = pullback(bundle, u, n);

    std::vector<WordList> support;
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        const auto sep = maximal_multi_separated(bundle, w, pulled, u_pulled, n * n, Span{0, horizon}, el.cover, el.join);
        WitnessFiber f;
        f.words = sep.words;
        f.pulled_count = sep.cover_count;
        f.bound = sep.bound;
        f.full_count = cover_count(bundle, w, u, steps, el.cover, el.join);
        support.push_back(f.words);
        out.fibers.push_back(std::move(f));
    }
    out.nu = equidistribution(horizon, support);

    // Fiberwise bound for every shift 0 <= i <= n and every partition.
    constexpr double tol = entropy_tolerance;
    for (std::size_t l = 0; l < out.partitions.size(); ++l) {
        for (int i = 0; i <= n; ++i) {
            const auto joined = range_join(bundle, out.partitions[l], i, i + steps - 1, el.join);
            const auto joined0 = range_join(bundle, out.partitions[l], 0, steps - 1, el.join);
            const auto pushed = pushforward(bundle, out.nu, i);
            for (Fiber w = 0; w < bundle.omega_count(); ++w) {
                FiberBound b;
                b.fiber = w;
                b.shift = i;
                b.partition = l;
                b.lhs = fiber_partition_entropy(out.nu, joined, w);
                b.lhs_pushed = fiber_partition_entropy(pushed, joined0, base.theta_pow(w, i));
                b.middle = log_floor(static_cast<double>(out.fibers[w].pulled_count) / n);
                b.rhs = log_floor(static_cast<double>(out.fibers[w].full_count) / (n * std::pow(d, n)));
                b.holds = b.lhs >= b.middle - tol && b.middle >= b.rhs - tol && std::abs(b.lhs - b.lhs_pushed) <= tol;
                out.fiber_bounds.push_back(b);
            }
        }
    }

    // Cesaro average.
    out.mixed_horizon = horizon - (steps - 1);
    std::vector<WordMeasure> shifted;
    for (int i = 0; i < steps; ++i) shifted.push_back(truncate(pushforward(bundle, out.nu, i), out.mixed_horizon));
    out.mu = mix(shifted, std::vector<double>(static_cast<std::size_t>(steps), 1.0 / steps));

    double integral = 0.0;
    for (Fiber w = 0; w < bundle.omega_count(); ++w)
        integral += base.weight(w) * log_floor(static_cast<double>(out.fibers[w].full_count) / (n * std::pow(d, n)));
    for (std::size_t l = 0; l < out.partitions.size(); ++l) {
        for (int mm = 1; mm <= n; ++mm) {
            const auto joined = range_join(bundle, out.partitions[l], 0, mm - 1, el.join);
            AverageBound b;
            b.partition = l;
            b.m = mm;
            b.lhs = cond_entropy_partition(bundle, truncate(out.mu, joined.window.end), joined);
            for (const auto& s : shifted) b.middle += cond_entropy_partition(bundle, truncate(s, joined.window.end), joined);
            b.middle /= steps;
            b.rhs = static_cast<double>(mm) / steps * (integral - mm * std::log(d));
            b.holds = b.lhs >= b.middle - tol && b.middle >= b.rhs - tol;
            out.average_bounds.push_back(b);
        }
    }
    return out;
}

}  // namespace rdelab
