#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rdelab/base.hpp"
#include "rdelab/spectral.hpp"

namespace rdelab {

/// Theta-invariant random Markov measure: the fiber law at w starts with p_w and
/// steps from coordinate i to i+1 with Q_{theta^i w}.
struct MarkovMeasure {
    std::vector<Matrix<double>> transitions;  // Q_w
    std::vector<std::vector<double>> starts;  // p_w
};

/// Horizon-limited fibered measure: for each fiber, weights on admissible words
/// of [0, horizon). Zero weights are not stored.
struct WordMeasure {
    int horizon = 0;
    std::vector<std::map<Word, double>> fibers;

    friend bool operator==(const WordMeasure&, const WordMeasure&) = default;
};

/// Support and stochasticity of per-fiber transition matrices.
inline Diagnostics check_transitions(const SymbolicBundle& bundle, const std::vector<Matrix<double>>& q,
                                     double tolerance = 1e-12) {
    Diagnostics d;
    if (q.size() != bundle.omega_count()) {
        d.add("expected one transition matrix per fiber");
        return d;
    }
    const std::size_t n = bundle.alphabet_size();
    for (Fiber w = 0; w < q.size(); ++w) {
        const auto& label = bundle.base().label(w);
        if (q[w].rows() != n || q[w].cols() != n) {
            d.add("Q of fiber '" + label + "' has the wrong shape");
            continue;
        }
        for (std::size_t a = 0; a < n; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double x = q[w](a, b);
                if (x < 0.0 || !std::isfinite(x)) d.add("Q of fiber '" + label + "' has a negative or non-finite entry");
                if (x > 0.0 && !bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b)))
                    d.add("Q of fiber '" + label + "' puts mass on forbidden transition " + bundle.alphabet()[a] +
                          "->" + bundle.alphabet()[b]);
                row += x;
            }
            if (bundle.allowed(w, static_cast<Symbol>(a)) && std::abs(row - 1.0) > tolerance)
                d.add("Q of fiber '" + label + "' row '" + bundle.alphabet()[a] + "' does not sum to 1");
        }
    }
    return d;
}

struct StationaryStarts {
    std::vector<std::vector<double>> starts;
    std::vector<bool> non_unique;  ///< per theta-cycle: reducible cycle product
    double residual = 0.0;         ///< max over cycles of ||p - p M||_1
    bool converged = true;
    std::size_t iterations = 0;
};

struct StationaryOptions {
    double tolerance = 1e-13;
    std::size_t max_iterations = 100000;
};

/// Orbit-consistent start vectors: on each theta-cycle (w, ..., theta^{L-1} w),
/// p_w is a stationary vector of Q_w Q_{theta w} ... Q_{theta^{L-1} w}, obtained
/// by power iteration of the lazy product (I + M)/2 from the uniform vector on
/// the allowed symbols, and p is carried along the cycle by p Q.
inline StationaryStarts stationary_starts(const SymbolicBundle& bundle, const std::vector<Matrix<double>>& q,
                                          StationaryOptions opts = {}) {
    const std::size_t n = bundle.alphabet_size();
    StationaryStarts out;
    out.starts.assign(bundle.omega_count(), std::vector<double>(n, 0.0));
    for (const auto& cyc : bundle.base().cycles()) {
        const Fiber head = cyc.front();
        Matrix<double> m = q[head];
        for (std::size_t j = 1; j < cyc.size(); ++j) m = m * q[cyc[j]];

        std::vector<double> p(n, 0.0);
        double allowed = 0.0;
        for (std::size_t a = 0; a < n; ++a) allowed += bundle.allowed(head, static_cast<Symbol>(a)) ? 1.0 : 0.0;
        for (std::size_t a = 0; a < n; ++a) p[a] = bundle.allowed(head, static_cast<Symbol>(a)) ? 1.0 / allowed : 0.0;

        double residual = 0.0;
        std::size_t it = 0;
        for (; it < opts.max_iterations; ++it) {
            const auto pm = left_multiply(p, m);
            residual = 0.0;
            for (std::size_t a = 0; a < n; ++a) residual += std::abs(pm[a] - p[a]);
            if (residual <= opts.tolerance) break;
            double total = 0.0;
            for (std::size_t a = 0; a < n; ++a) total += (p[a] = 0.5 * (p[a] + pm[a]));
            for (auto& x : p) x /= total;
        }
        out.iterations = std::max(out.iterations, it);
        if (it == opts.max_iterations) out.converged = false;

        // Unique stationary vector iff the support graph has one closed class.
        SparseNonneg g = SparseNonneg::from_dense(m);
        std::vector<bool> active(n);
        for (std::size_t a = 0; a < n; ++a) active[a] = bundle.allowed(head, static_cast<Symbol>(a));
        std::size_t ncomp = 0;
        const auto comp = strongly_connected_components(g, &ncomp);
        std::vector<bool> closed(ncomp, true), present(ncomp, false);
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            present[comp[a]] = true;
            for (const auto& [b, weight] : g.rows[a])
                if (comp[b] != comp[a]) closed[comp[a]] = false;
        }
        std::size_t closed_classes = 0;
        for (std::size_t c = 0; c < ncomp; ++c) closed_classes += (present[c] && closed[c]) ? 1 : 0;
        out.non_unique.push_back(closed_classes > 1);

        out.starts[head] = p;
        for (std::size_t j = 0; j + 1 < cyc.size(); ++j) out.starts[cyc[j + 1]] = left_multiply(out.starts[cyc[j]], q[cyc[j]]);
        const auto closing = left_multiply(out.starts[cyc.back()], q[cyc.back()]);
        double r = 0.0;
        for (std::size_t a = 0; a < n; ++a) r += std::abs(closing[a] - p[a]);
        out.residual = std::max(out.residual, r);
    }
    return out;
}

/// max_w || p_{theta w} - p_w Q_w ||_1
inline double invariance_residual(const SymbolicBundle& bundle, const MarkovMeasure& mu) {
    double worst = 0.0;
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        const auto pushed = left_multiply(mu.starts[w], mu.transitions[w]);
        const auto& target = mu.starts[bundle.base().theta(w)];
        double r = 0.0;
        for (std::size_t a = 0; a < pushed.size(); ++a) r += std::abs(target[a] - pushed[a]);
        worst = std::max(worst, r);
    }
    return worst;
}

inline constexpr double invariance_tolerance = 1e-12;

/// Builds the invariant Markov measure for Q; start vectors are always derived.
inline MarkovMeasure make_markov(const SymbolicBundle& bundle, std::vector<Matrix<double>> q) {
    const auto d = check_transitions(bundle, q);
    if (!d.ok()) fail(ErrorKind::precondition, "invalid transition matrices: " + d.issues.front());
    auto st = stationary_starts(bundle, q);
    if (!st.converged || st.residual > invariance_tolerance)
        fail(ErrorKind::numeric, "stationary start iteration did not converge (residual " +
                                     std::to_string(st.residual) + ")");
    return MarkovMeasure{std::move(q), std::move(st.starts)};
}

/// Finite-window disintegration of a Markov measure.
inline WordMeasure markov_to_word(const SymbolicBundle& bundle, const MarkovMeasure& mu, int horizon) {
    require(horizon >= 1, "markov_to_word: horizon must be >= 1");
    WordMeasure out;
    out.horizon = horizon;
    out.fibers.resize(bundle.omega_count());
    const auto& base = bundle.base();
    const std::size_t d = bundle.alphabet_size();
    const std::size_t len = static_cast<std::size_t>(horizon);
    for (Fiber w0 = 0; w0 < bundle.omega_count(); ++w0) {
        std::vector<Fiber> fiber_at(len);
        for (std::size_t i = 0; i < len; ++i) fiber_at[i] = base.theta_pow(w0, static_cast<long>(i));
        Word word(len);
        std::vector<double> mass(len);
        std::vector<std::size_t> next(len, 0);
        std::size_t depth = 0;
        while (true) {
            if (next[depth] >= d) {
                if (depth == 0) break;
                --depth;
                continue;
            }
            const auto a = static_cast<Symbol>(next[depth]++);
            const double m = depth == 0 ? mu.starts[w0][a]
                                        : mass[depth - 1] * mu.transitions[fiber_at[depth - 1]](word[depth - 1], a);
            if (!(m > 0.0)) continue;
            word[depth] = a;
            mass[depth] = m;
            if (depth + 1 == len) {
                out.fibers[w0].emplace(word, m);
            } else {
                ++depth;
                next[depth] = 0;
            }
        }
    }
    return out;
}

/// Theta applied to a word measure: drop the first coordinate, move fiber w to theta w.
inline WordMeasure pushforward(const SymbolicBundle& bundle, const WordMeasure& nu) {
    require(nu.horizon >= 2, "pushforward: horizon exhausted");
    WordMeasure out;
    out.horizon = nu.horizon - 1;
    out.fibers.resize(nu.fibers.size());
    for (Fiber w = 0; w < nu.fibers.size(); ++w) {
        auto& target = out.fibers[bundle.base().theta(w)];
        for (const auto& [word, m] : nu.fibers[w]) target[Word(word.begin() + 1, word.end())] += m;
    }
    return out;
}

inline WordMeasure pushforward(const SymbolicBundle& bundle, WordMeasure nu, int times) {
    for (int i = 0; i < times; ++i) nu = pushforward(bundle, nu);
    return nu;
}

/// Restriction to the first `horizon` coordinates.
inline WordMeasure truncate(const WordMeasure& nu, int horizon) {
    require(1 <= horizon && horizon <= nu.horizon, "truncate: horizon out of range");
    if (horizon == nu.horizon) return nu;
    WordMeasure out;
    out.horizon = horizon;
    out.fibers.resize(nu.fibers.size());
    for (std::size_t w = 0; w < nu.fibers.size(); ++w)
        for (const auto& [word, m] : nu.fibers[w]) out.fibers[w][Word(word.begin(), word.begin() + horizon)] += m;
    return out;
}

/// Per-fiber convex combination.
inline WordMeasure mix(const std::vector<WordMeasure>& measures, const std::vector<double>& weights) {
    require(!measures.empty() && measures.size() == weights.size(), "mix: one weight per measure required");
    double total = 0.0;
    for (double a : weights) {
        require(a >= 0.0, "mix: weights must be nonnegative");
        total += a;
    }
    require(std::abs(total - 1.0) <= 1e-12, "mix: weights must sum to 1");
    WordMeasure out;
    out.horizon = measures.front().horizon;
    out.fibers.resize(measures.front().fibers.size());
    for (std::size_t i = 0; i < measures.size(); ++i) {
        if (measures[i].horizon != out.horizon) fail(ErrorKind::precondition, "mix: horizon mismatch");
        if (weights[i] == 0.0) continue;
        for (std::size_t w = 0; w < out.fibers.size(); ++w)
            for (const auto& [word, m] : measures[i].fibers[w]) out.fibers[w][word] += weights[i] * m;
    }
    return out;
}

/// Per-fiber uniform distribution on the given words.
inline WordMeasure equidistribution(int horizon, const std::vector<WordList>& support) {
    WordMeasure out;
    out.horizon = horizon;
    out.fibers.resize(support.size());
    for (std::size_t w = 0; w < support.size(); ++w) {
        require(!support[w].empty(), "equidistribution on an empty set");
        for (const auto& word : support[w]) {
            require(static_cast<int>(word.size()) == horizon, "equidistribution: word length differs from horizon");
            out.fibers[w][word] += 1.0 / static_cast<double>(support[w].size());
        }
    }
    return out;
}

/// Largest |difference| of weights over all fibers and words.
inline double max_weight_difference(const WordMeasure& a, const WordMeasure& b) {
    double worst = a.horizon == b.horizon ? 0.0 : 1.0;
    for (std::size_t w = 0; w < std::min(a.fibers.size(), b.fibers.size()); ++w) {
        for (const auto& [word, m] : a.fibers[w]) {
            const auto it = b.fibers[w].find(word);
            worst = std::max(worst, std::abs(m - (it == b.fibers[w].end() ? 0.0 : it->second)));
        }
        for (const auto& [word, m] : b.fibers[w])
            if (!a.fibers[w].count(word)) worst = std::max(worst, m);
    }
    return worst;
}

}  // namespace rdelab
