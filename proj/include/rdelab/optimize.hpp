#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdelab/entropy.hpp"

namespace rdelab {

struct MaximizeOptions {
    int budget = 2000;      ///< objective evaluations
    std::uint64_t seed = 0;
    int nmax = 4;           ///< finite-n objective when no closed form applies
    int restarts = 0;       ///< 0: one restart per 200 evaluations
    CoverMode mode = CoverMode::general;
    EntropyLimits limits;
};

struct MaximizeResult {
    MarkovMeasure best;
    double value = -std::numeric_limits<double>::infinity();
    double htop = 0.0;
    double gap = 0.0;               ///< htop - value
    double max_seen = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::size_t above_htop = 0;     ///< sampled measures with value > htop + 1e-9
    std::string objective;
};

namespace detail {

/// Euclidean projection of v onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumulative += u[k];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    for (auto& x : v) x = std::max(0.0, x - tau);
    double total = 0.0;
    for (double x : v) total += x;
    for (auto& x : v) x /= total;
    return v;
}

struct QSpace {
    // support[w][a]: successors b of a in fiber w (empty when a is not allowed).
    std::vector<std::vector<std::vector<std::size_t>>> support;
    std::size_t d = 0;

    explicit QSpace(const SymbolicBundle& bundle) : d(bundle.alphabet_size()) {
        support.resize(bundle.omega_count(), std::vector<std::vector<std::size_t>>(d));
        for (Fiber w = 0; w < bundle.omega_count(); ++w)
            for (std::size_t a = 0; a < d; ++a)
                if (bundle.allowed(w, static_cast<Symbol>(a)))
                    for (std::size_t b = 0; b < d; ++b)
                        if (bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b))) support[w][a].push_back(b);
    }

    std::vector<Matrix<double>> uniform() const {
        std::vector<Matrix<double>> q(support.size(), Matrix<double>(d, d));
        for (std::size_t w = 0; w < support.size(); ++w)
            for (std::size_t a = 0; a < d; ++a)
                for (auto b : support[w][a]) q[w](a, b) = 1.0 / static_cast<double>(support[w][a].size());
        return q;
    }

    template <class Rng>
    std::vector<Matrix<double>> random(Rng& rng) const {
        std::exponential_distribution<double> draw(1.0);
        std::vector<Matrix<double>> q(support.size(), Matrix<double>(d, d));
        for (std::size_t w = 0; w < support.size(); ++w)
            for (std::size_t a = 0; a < d; ++a) {
                if (support[w][a].empty()) continue;
                double total = 0.0;
                std::vector<double> x;
                for (std::size_t k = 0; k < support[w][a].size(); ++k) {
                    x.push_back(draw(rng));
                    total += x.back();
                }
                for (std::size_t k = 0; k < x.size(); ++k) q[w](a, support[w][a][k]) = x[k] / total;
            }
        return q;
    }

    template <class Rng>
    std::vector<Matrix<double>> perturb(std::vector<Matrix<double>> q, double step, Rng& rng) const {
        std::vector<std::pair<std::size_t, std::size_t>> rows;
        for (std::size_t w = 0; w < support.size(); ++w)
            for (std::size_t a = 0; a < d; ++a)
                if (support[w][a].size() > 1) rows.emplace_back(w, a);
        if (rows.empty()) return q;
        std::normal_distribution<double> noise(0.0, step);
        const auto [w, a] = rows[std::uniform_int_distribution<std::size_t>(0, rows.size() - 1)(rng)];
        std::vector<double> x;
        for (auto b : support[w][a]) x.push_back(q[w](a, b) + noise(rng));
        x = project_simplex(std::move(x));
        for (std::size_t k = 0; k < x.size(); ++k) q[w](a, support[w][a][k]) = x[k];
        return q;
    }
};

}  // namespace detail

/// Random-restart hill climbing over invariant Markov measures for the largest
/// entropy of a partition (or h^- of a cover). Each restart draws from its own
/// generator seeded by (seed, restart index); restart 0 starts from the uniform
/// transition matrices.
inline MaximizeResult maximize_partition_entropy(const SymbolicBundle& bundle, const PositionedCover& target,
                                                 const MaximizeOptions& options = {}) {
    require(options.budget >= 1, "maximize_partition_entropy: budget must be >= 1");
    const bool partition = is_partition(target);
    const bool closed_form = partition && fiberwise_cylindrical(target);
    MaximizeResult out;
    out.objective = closed_form ? "markov-chain-rule" : partition ? "partition-fekete" : "h-minus-fekete";

    auto evaluate = [&](const std::vector<Matrix<double>>& q, MarkovMeasure& mu) -> std::optional<double> {
        try {
            mu = make_markov(bundle, q);
        } catch (const Error&) {
            return std::nullopt;
        }
        if (invariance_residual(bundle, mu) > invariance_tolerance) return std::nullopt;
        if (closed_form) return markov_entropy_rate(bundle, mu);
        if (partition) return h_partition_rate(bundle, mu, target, options.nmax, options.limits).certified_upper;
        return h_minus_estimate(bundle, mu, target, options.nmax, options.mode, options.limits).certified_upper;
    };

    if (partition) out.htop = htop_estimate(bundle, target, 1, options.limits).exact_rate.value_or(0.0);
    else out.htop = htop_estimate(bundle, target, options.nmax, options.limits).certified_upper;

    const detail::QSpace space(bundle);
    const int restarts = options.restarts > 0 ? options.restarts : std::max(1, options.budget / 200);
    const int per_restart = std::max(1, options.budget / restarts);
    int remaining = options.budget;

    for (int r = 0; r < restarts && remaining > 0; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        auto current = r == 0 ? space.uniform() : space.random(rng);
        MarkovMeasure mu;
        auto value = evaluate(current, mu);
        --remaining;
        ++out.evaluations;
        double current_value = value.value_or(-std::numeric_limits<double>::infinity());
        auto record = [&](double v, const MarkovMeasure& m) {
            out.max_seen = std::max(out.max_seen, v);
            if (v > out.htop + entropy_tolerance) ++out.above_htop;
            if (v > out.value) {
                out.value = v;
                out.best = m;
            }
        };
        if (value) record(*value, mu);
        double step = 0.25;
        int stall = 0;
        for (int it = 1; it < per_restart && remaining > 0; ++it) {
            auto candidate = space.perturb(current, step, rng);
            MarkovMeasure cand_mu;
            const auto v = evaluate(candidate, cand_mu);
            --remaining;
            ++out.evaluations;
            if (!v) continue;
            record(*v, cand_mu);
            if (*v > current_value) {
                current = std::move(candidate);
                current_value = *v;
                stall = 0;
            } else if (++stall >= 20) {
                step = std::max(step * 0.5, 1e-4);
                stall = 0;
            }
        }
    }
    out.gap = out.htop - out.value;
    return out;
}

}  // namespace rdelab
