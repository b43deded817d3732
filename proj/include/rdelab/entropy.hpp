#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rdelab/base.hpp"
#include "rdelab/cover.hpp"
#include "rdelab/measure.hpp"
#include "rdelab/set_cover.hpp"
#include "rdelab/spectral.hpp"

namespace rdelab {

inline constexpr double entropy_tolerance = 1e-9;

/// -x ln x with 0 ln 0 = 0.
inline double entropy_term(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

/// Shannon entropy in nats of a nonnegative vector (not renormalized).
inline double shannon(std::span<const double> p) {
    double h = 0.0;
    for (double x : p) {
        if (x < 0.0) fail(ErrorKind::precondition, "shannon: negative entry");
        h += entropy_term(x);
    }
    return h;
}

inline double shannon(std::initializer_list<double> p) { return shannon(std::span<const double>(p.begin(), p.size())); }

// ---------------------------------------------------------------------------
// Mass transfer inequality

struct MassTransferCheck {
    std::vector<std::string> violations;  ///< hypothesis failures, field by field
    bool holds = false;
    double margin = 0.0;  ///< H(p) - H(p - delta_1 e_1 + sum delta_k e_k)

    bool hypotheses_ok() const noexcept { return violations.empty(); }
};

/// Moving delta_1 of mass off the smallest entry p_1 onto larger entries strictly
/// lowers H(p_1, ..., p_K) = -sum p_k ln p_k. Hypotheses are checked first and
/// reported separately from the verdict.
inline MassTransferCheck lemma7_holds(const std::vector<double>& p, const std::vector<double>& delta,
                                double tolerance = 1e-12) {
    MassTransferCheck out;
    const std::size_t k = p.size();
    if (k < 2) out.violations.push_back("K must be >= 2");
    if (delta.size() != k) out.violations.push_back("delta must have the same length as p");
    if (!out.violations.empty()) return out;

    double sum = 0.0, moved = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0)) out.violations.push_back("p_" + std::to_string(i + 1) + " not in (0,1)");
        if (i > 0 && p[i] < p[i - 1]) out.violations.push_back("p not sorted ascending at " + std::to_string(i + 1));
        sum += p[i];
        if (i > 0) {
            if (!(delta[i] >= 0.0 && delta[i] < 1.0 - p[i]))
                out.violations.push_back("delta_" + std::to_string(i + 1) + " not in [0, 1 - p_" + std::to_string(i + 1) + ")");
            moved += delta[i];
        }
    }
    if (sum > 1.0 + tolerance) out.violations.push_back("sum of p exceeds 1");
    if (!(delta[0] > 0.0)) out.violations.push_back("delta_1 must be > 0");
    if (!(delta[0] < p[0])) out.violations.push_back("delta_1 must be < p_1");
    if (std::abs(moved - delta[0]) > tolerance) out.violations.push_back("sum of delta_k (k >= 2) differs from delta_1");
    if (!out.violations.empty()) return out;

    std::vector<double> q = p;
    q[0] -= delta[0];
    for (std::size_t i = 1; i < k; ++i) q[i] += delta[i];
    out.margin = shannon(p) - shannon(q);
    out.holds = out.margin > 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Reports

struct EntropyReport {
    std::vector<std::pair<int, double>> sequence;  ///< (n, value / n)
    std::vector<double> certified;                 ///< running minimum of the sequence
    double certified_upper = std::numeric_limits<double>::infinity();
    std::optional<double> exact_rate;
    std::vector<std::string> methods;

    void push(int n, double value_over_n) {
        sequence.emplace_back(n, value_over_n);
        certified_upper = std::min(certified_upper, value_over_n);
        certified.push_back(certified_upper);
    }
};

struct EntropyLimits {
    SetCoverLimits cover;
    JoinLimits join;
    std::size_t enum_max = 100'000;      ///< product-mode partitions
    std::size_t search_nodes_max = 200'000;  ///< general-mode search nodes per fiber component
    std::size_t dfa_states_max = 200'000;
};

// ---------------------------------------------------------------------------
// Topological side

/// Whether some element is all of E (its sections are every admissible word).
inline bool has_full_element(const SymbolicBundle& bundle, const PositionedCover& u) {
    const auto adm = detail::admissible_by_fiber(bundle, u.window);
    for (const auto& element : u.sections) {
        bool full = true;
        for (Fiber w = 0; w < adm.size() && full; ++w) full = element[w] == adm[w];
        if (full) return true;
    }
    return false;
}

/// H(T, U, n) = sum_w P(w) ln N(T, w, U, n).
inline double cover_complexity(const SymbolicBundle& bundle, const PositionedCover& u, int n,
                               const EntropyLimits& limits = {}) {
    require(n >= 1, "cover_complexity: n must be >= 1");
    if (has_full_element(bundle, u)) return 0.0;
    const auto joined = range_join(bundle, u, 0, n - 1, limits.join);
    double h = 0.0;
    for (Fiber w = 0; w < bundle.omega_count(); ++w)
        h += bundle.base().weight(w) *
             std::log(static_cast<double>(min_subcover_count(bundle, w, joined, limits.cover).size));
    return h;
}

/// Exact growth rate of the number of nonempty cells of a partition's iterated
/// joins. The cell sequences seen along a fiber are the label sequences of a
/// labelled graph on window blocks; its subset construction is deterministic, so
/// the count is the number of paths from the start layer and the rate is ln of
/// the largest spectral radius reachable from it. Returns the P-integrated rate.
inline double partition_growth_rate(const SymbolicBundle& bundle, const PositionedCover& u,
                                    const EntropyLimits& limits = {}) {
    require(is_partition(u), "partition_growth_rate: cover is not a partition");
    const auto& base = bundle.base();
    const Span win = u.window;
    const int m = win.length();
    const std::size_t fibers = bundle.omega_count();

    std::vector<WordList> blocks(fibers);
    std::vector<std::vector<std::size_t>> label(fibers);
    for (Fiber f = 0; f < fibers; ++f) {
        blocks[f] = admissible_words(bundle, f, win);
        label[f].resize(blocks[f].size());
        for (std::size_t i = 0; i < blocks[f].size(); ++i)
            for (std::size_t k = 0; k < u.size(); ++k)
                if (contains_word(u.sections[k][f], blocks[f][i])) label[f][i] = k;
    }
    // succ[f][i]: blocks of fiber theta f following block i of fiber f.
    std::vector<std::vector<std::vector<std::uint32_t>>> succ(fibers);
    for (Fiber f = 0; f < fibers; ++f) {
        const Fiber g = base.theta(f);
        const Fiber junction = base.theta_pow(f, win.begin + m - 1);
        succ[f].resize(blocks[f].size());
        for (std::size_t i = 0; i < blocks[f].size(); ++i)
            for (std::size_t j = 0; j < blocks[g].size(); ++j) {
                const Word& b = blocks[f][i];
                const Word& c = blocks[g][j];
                if (!std::equal(b.begin() + 1, b.end(), c.begin())) continue;
                if (bundle.edge(junction, b.back(), c.back())) succ[f][i].push_back(static_cast<std::uint32_t>(j));
            }
    }

    double integrated = 0.0;
    for (const auto& cyc : base.cycles()) {
        using State = std::pair<Fiber, std::vector<std::uint32_t>>;
        std::map<State, std::size_t> id;
        std::vector<State> states;
        auto intern = [&](State s) {
            auto [it, fresh] = id.try_emplace(std::move(s), states.size());
            if (fresh) {
                states.push_back(it->first);
                if (states.size() > limits.dfa_states_max)
                    fail(ErrorKind::guard, "partition_growth_rate: subset automaton exceeds " +
                                               std::to_string(limits.dfa_states_max) + " states");
            }
            return it->second;
        };
        const Fiber head = cyc.front();
        std::map<std::size_t, std::vector<std::uint32_t>> first_layer;
        for (std::size_t i = 0; i < blocks[head].size(); ++i)
            first_layer[label[head][i]].push_back(static_cast<std::uint32_t>(i));
        std::vector<std::size_t> frontier;
        for (auto& [lab, set] : first_layer) frontier.push_back(intern({head, set}));

        std::vector<std::vector<std::size_t>> edges;
        for (std::size_t cursor = 0; cursor < states.size(); ++cursor) {
            const auto [f, set] = states[cursor];
            const Fiber g = base.theta(f);
            std::map<std::size_t, std::vector<std::uint32_t>> by_label;
            for (auto i : set)
                for (auto j : succ[f][i]) by_label[label[g][j]].push_back(j);
            std::vector<std::size_t> out;
            for (auto& [lab, next] : by_label) {
                std::sort(next.begin(), next.end());
                next.erase(std::unique(next.begin(), next.end()), next.end());
                out.push_back(intern({g, next}));
            }
            if (edges.size() <= cursor) edges.resize(cursor + 1);
            edges[cursor] = std::move(out);
        }
        SparseNonneg graph(states.size());
        for (std::size_t s = 0; s < edges.size(); ++s)
            for (auto t : edges[s]) graph.add(s, t, 1.0);
        const auto spectral = spectral_radius(graph);
        if (!spectral.converged) fail(ErrorKind::numeric, "partition_growth_rate: power iteration did not converge");
        double mass = 0.0;
        for (Fiber w : cyc) mass += base.weight(w);
        integrated += mass * std::log(spectral.radius);
    }
    return integrated;
}

/// h_top(T, U): (1/n) H(T, U, n) for n <= nmax with its Fekete upper bound;
/// partitions also get the exact rate.
inline EntropyReport htop_estimate(const SymbolicBundle& bundle, const PositionedCover& u, int nmax,
                                   const EntropyLimits& limits = {}) {
    require(nmax >= 1, "htop_estimate: nmax must be >= 1");
    EntropyReport r;
    r.methods.push_back("fekete-infimum");
    for (int n = 1; n <= nmax; ++n) r.push(n, cover_complexity(bundle, u, n, limits) / n);
    if (is_partition(u)) {
        r.exact_rate = partition_growth_rate(bundle, u, limits);
        r.methods.push_back("block-recoded-spectral");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Measure side

/// Distribution of the words of `span` (inside [0, horizon)) under nu_w.
inline std::map<Word, double> window_marginal(const WordMeasure& nu, Fiber w, Span span) {
    require(span.begin >= 0 && span.end <= nu.horizon, "window does not fit the measure horizon");
    std::map<Word, double> out;
    const Span full{0, nu.horizon};
    for (const auto& [word, m] : nu.fibers[w]) out[restrict_word(word, full, span)] += m;
    return out;
}

/// H_{nu_w}(R(w)).
inline double fiber_partition_entropy(const WordMeasure& nu, const PositionedCover& r, Fiber w) {
    std::map<Word, std::size_t> cell_of;
    for (std::size_t k = 0; k < r.size(); ++k)
        for (const auto& word : r.sections[k][w]) cell_of.emplace(word, k);
    std::vector<double> cell_mass(r.size(), 0.0);
    for (const auto& [word, m] : window_marginal(nu, w, r.window)) {
        const auto it = cell_of.find(word);
        if (it == cell_of.end()) fail(ErrorKind::precondition, "partition does not cover the measure's support");
        cell_mass[it->second] += m;
    }
    return shannon(cell_mass);
}

/// H_mu(R | F_E) = sum_w P(w) H_{mu_w}(R(w)).
inline double cond_entropy_partition(const SymbolicBundle& bundle, const WordMeasure& nu, const PositionedCover& r) {
    double h = 0.0;
    for (Fiber w = 0; w < bundle.omega_count(); ++w) h += bundle.base().weight(w) * fiber_partition_entropy(nu, r, w);
    return h;
}

inline double cond_entropy_partition(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PositionedCover& r) {
    return cond_entropy_partition(bundle, markov_to_word(bundle, mu, r.window.end), r);
}

enum class CoverMode { general, product };

inline const char* to_string(CoverMode mode) { return mode == CoverMode::general ? "general" : "product"; }

struct CoverEntropy {
    double value = 0.0;                  ///< the minimum, or the best value found when not exact
    double lower = 0.0;                  ///< proven lower bound (equals value when exact)
    bool exact = true;
    std::vector<double> per_fiber;       ///< general mode: fiber minima (best found)
    std::vector<double> per_fiber_lower;
    bool complete = true;                ///< false when the product enumeration hit its guard
    std::size_t candidates = 0;          ///< product mode: partitions evaluated
    std::optional<PositionedPartition> argmin;  ///< product mode minimizer
};

namespace detail {

/// Bounds on a minimum; exact when lower == upper was proven by a complete search.
struct EntropyBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool exact = true;
};

/// min over assignments of items to containing sets of sum_cells -m ln m.
///
/// Some optimal assignment is a sequence of cells S_j ∩ R (R: items not yet
/// assigned) of non-increasing mass: moving mass into the largest cell never
/// raises entropy, and swapping two adjacent cells of increasing mass moves their
/// overlap into the larger one. The search enumerates such sequences. Pruning
/// uses sum_i m_i (-ln c_i), where c_i is the largest admissible cell item i
/// could still join, and drops states reached before at no higher cost and no
/// tighter mass cap. When the node budget runs out the result is a bracket.
struct MinEntropyAssignment {
    struct Seen {
        double cost;
        double cap;
    };

    std::vector<double> mass;
    std::vector<Bitset> sets;
    std::size_t node_max = 200'000;
    std::size_t nodes = 0;
    bool truncated = false;
    std::unordered_map<Bitset, Seen, BitsetHash> seen;
    double best = std::numeric_limits<double>::infinity();

    double mass_of(const Bitset& b) const {
        double m = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (b.test(i)) m += mass[i];
        return m;
    }

    /// Cells S_j ∩ R that are maximal in R, heaviest first, with their masses.
    std::vector<std::pair<double, Bitset>> maximal_cells(const Bitset& rest) const {
        std::vector<Bitset> options;
        for (const auto& s : sets) {
            Bitset t = s;
            t &= rest;
            if (t.any()) options.push_back(std::move(t));
        }
        std::vector<std::pair<double, Bitset>> out;
        for (std::size_t i = 0; i < options.size(); ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < options.size() && !dominated; ++j)
                if (i != j && options[i].subset_of(options[j]) && (!(options[i] == options[j]) || j < i)) dominated = true;
            if (!dominated) out.emplace_back(mass_of(options[i]), options[i]);
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        return out;
    }

    double lower_bound(const Bitset& rest, const std::vector<std::pair<double, Bitset>>& cells, double cap) const {
        std::vector<double> reach(mass.size(), 0.0);
        for (const auto& [m, t] : cells)
            for (std::size_t i = 0; i < mass.size(); ++i)
                if (t.test(i)) reach[i] = std::max(reach[i], std::min(m, cap));
        double lb = 0.0;
        for (std::size_t i = 0; i < mass.size(); ++i)
            if (rest.test(i)) {
                if (reach[i] <= 0.0) return std::numeric_limits<double>::infinity();
                lb -= mass[i] * std::log(reach[i]);
            }
        return lb;
    }

    double greedy(Bitset rest) const {
        double h = 0.0;
        while (rest.any()) {
            const auto cells = maximal_cells(rest);
            if (cells.empty()) fail(ErrorKind::precondition, "cover does not cover the measure's support");
            h += entropy_term(cells.front().first);
            rest.subtract(cells.front().second);
        }
        return h;
    }

    void search(const Bitset& rest, double cost, double cap) {
        if (!rest.any()) {
            best = std::min(best, cost);
            return;
        }
        if (truncated) return;
        if (++nodes > node_max) {
            truncated = true;
            return;
        }
        constexpr double slack = 1e-14;
        const auto cells = maximal_cells(rest);
        if (cost + lower_bound(rest, cells, cap) >= best - slack) return;
        if (auto it = seen.find(rest); it != seen.end()) {
            if (it->second.cost <= cost + slack && it->second.cap >= cap) return;
            if (cost <= it->second.cost && cap >= it->second.cap) it->second = {cost, cap};
        } else {
            seen.emplace(rest, Seen{cost, cap});
        }
        for (const auto& [m, cell] : cells) {
            if (m > cap) continue;
            Bitset next = rest;
            next.subtract(cell);
            search(next, cost + entropy_term(m), m);
        }
    }

    EntropyBounds solve(const Bitset& all) {
        if (!all.any()) return {};
        best = greedy(all);
        seen.clear();
        nodes = 0;
        truncated = false;
        search(all, 0.0, std::numeric_limits<double>::infinity());
        if (!truncated) return {best, best, true};
        const auto cells = maximal_cells(all);
        return {std::min(best, lower_bound(all, cells, std::numeric_limits<double>::infinity())), best, false};
    }
};

/// Splits items into groups no set links together.
inline std::vector<std::vector<std::size_t>> item_components(std::size_t items, const std::vector<Bitset>& sets) {
    std::vector<std::size_t> parent(items);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& s : sets) {
        std::size_t first = items;
        for (std::size_t i = 0; i < items; ++i)
            if (s.test(i)) {
                if (first == items) first = i;
                else parent[find(i)] = find(first);
            }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < items; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    return out;
}

/// Minimum entropy of a fiber partition refining the cover sections, over the
/// support of `marginal`. Words with the same set of containing elements end up
/// in the same cell of some optimal assignment, so they are merged first.
inline EntropyBounds min_fiber_entropy(const std::map<Word, double>& marginal,
                                       const std::vector<const WordList*>& sections, std::size_t node_max) {
    std::map<std::vector<std::size_t>, double> pattern_mass;
    for (const auto& [word, m] : marginal) {
        if (!(m > 0.0)) continue;
        std::vector<std::size_t> in;
        for (std::size_t k = 0; k < sections.size(); ++k)
            if (contains_word(*sections[k], word)) in.push_back(k);
        if (in.empty()) fail(ErrorKind::precondition, "cover does not cover the measure's support");
        pattern_mass[in] += m;
    }
    std::vector<double> mass;
    std::vector<Bitset> sets(sections.size(), Bitset(pattern_mass.size()));
    std::size_t item = 0;
    for (const auto& [in, m] : pattern_mass) {
        mass.push_back(m);
        for (auto k : in) sets[k].set(item);
        ++item;
    }
    EntropyBounds total;
    for (const auto& group : item_components(mass.size(), sets)) {
        MinEntropyAssignment search;
        search.node_max = node_max;
        for (auto i : group) search.mass.push_back(mass[i]);
        for (const auto& s : sets) {
            Bitset t(group.size());
            for (std::size_t k = 0; k < group.size(); ++k)
                if (s.test(group[k])) t.set(k);
            if (t.any() && std::find(search.sets.begin(), search.sets.end(), t) == search.sets.end())
                search.sets.push_back(std::move(t));
        }
        Bitset all(group.size());
        all.fill();
        const auto b = search.solve(all);
        total.lower += b.lower;
        total.upper += b.upper;
        total.exact = total.exact && b.exact;
    }
    return total;
}

}  // namespace detail

/// H_mu(U | F_E) = inf over partitions R ⪰ U of H_mu(R | F_E).
///
/// general: partitions may depend on the fiber, so the infimum splits into exact
/// per-fiber minimizations over assignments of support words to elements.
/// product: minimum over the product-form partitions finer than U.
inline CoverEntropy cover_cond_entropy(const SymbolicBundle& bundle, const WordMeasure& nu, const PositionedCover& u,
                                       CoverMode mode, const EntropyLimits& limits = {}) {
    CoverEntropy out;
    out.per_fiber.assign(bundle.omega_count(), 0.0);
    out.per_fiber_lower.assign(bundle.omega_count(), 0.0);
    if (has_full_element(bundle, u)) {
        if (mode == CoverMode::product) out.candidates = 0;
        return out;
    }
    if (mode == CoverMode::general) {
        for (Fiber w = 0; w < bundle.omega_count(); ++w) {
            std::vector<const WordList*> sections;
            for (const auto& element : u.sections) sections.push_back(&element[w]);
            const auto b = detail::min_fiber_entropy(window_marginal(nu, w, u.window), sections, limits.search_nodes_max);
            out.per_fiber[w] = b.upper;
            out.per_fiber_lower[w] = b.lower;
            out.value += bundle.base().weight(w) * b.upper;
            out.lower += bundle.base().weight(w) * b.lower;
            out.exact = out.exact && b.exact;
        }
        return out;
    }
    auto partitions = product_partitions_finer(bundle, u);
    out.complete = partitions.count() <= limits.enum_max;
    out.value = std::numeric_limits<double>::infinity();
    while (out.candidates < limits.enum_max) {
        auto p = partitions.next();
        if (!p) break;
        ++out.candidates;
        const double h = cond_entropy_partition(bundle, nu, *p);
        if (h < out.value) {
            out.value = h;
            out.argmin = std::move(*p);
        }
    }
    out.exact = out.complete;
    out.lower = out.complete ? out.value : 0.0;
    return out;
}

inline CoverEntropy cover_cond_entropy(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PositionedCover& u,
                                       CoverMode mode, const EntropyLimits& limits = {}) {
    return cover_cond_entropy(bundle, markov_to_word(bundle, mu, u.window.end), u, mode, limits);
}

/// Chain-rule entropy rate of an invariant Markov measure:
/// sum_w P(w) sum_a p_w(a) H(Q_w(a, .)).
inline double markov_entropy_rate(const SymbolicBundle& bundle, const MarkovMeasure& mu) {
    double h = 0.0;
    const std::size_t d = bundle.alphabet_size();
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        double fiber = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < d; ++b) row += entropy_term(mu.transitions[w](a, b));
            fiber += mu.starts[w][a] * row;
        }
        h += bundle.base().weight(w) * fiber;
    }
    return h;
}

inline void require_invariant(const SymbolicBundle& bundle, const MarkovMeasure& mu) {
    const double r = invariance_residual(bundle, mu);
    if (r > invariance_tolerance)
        fail(ErrorKind::precondition, "measure is not invariant (residual " + std::to_string(r) + ")");
}

/// h_mu^-(T, U): (1/n) H_mu(U_0^{n-1} | F_E) for n <= nmax, with the Fekete bound.
inline EntropyReport h_minus_estimate(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PositionedCover& u,
                                      int nmax, CoverMode mode, const EntropyLimits& limits = {}) {
    require(nmax >= 1, "h_minus_estimate: nmax must be >= 1");
    require_invariant(bundle, mu);
    EntropyReport r;
    r.methods.push_back(std::string("fekete-infimum/") + to_string(mode));
    const auto nu = markov_to_word(bundle, mu, u.window.end + nmax - 1);
    for (int n = 1; n <= nmax; ++n) {
        const auto joined = range_join(bundle, u, 0, n - 1, limits.join);
        const auto h = cover_cond_entropy(bundle, truncate(nu, joined.window.end), joined, mode, limits);
        if (!h.complete) r.methods.push_back("partial-enumeration@n=" + std::to_string(n));
        else if (!h.exact) r.methods.push_back("search-budget@n=" + std::to_string(n));
        r.push(n, h.value / n);
    }
    return r;
}

/// Whether every section of every element holds at most one word, i.e. the
/// partition coincides fiberwise with the cylinder partition of its window.
inline bool fiberwise_cylindrical(const PositionedCover& r) {
    for (const auto& element : r.sections)
        for (const auto& s : element)
            if (s.size() > 1) return false;
    return true;
}

/// h_mu(T, R) for a partition: finite-n sequence plus the chain-rule rate when R
/// generates (fiberwise cylindrical).
inline EntropyReport h_partition_rate(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PositionedCover& r,
                                      int nmax, const EntropyLimits& limits = {}) {
    require(nmax >= 1, "h_partition_rate: nmax must be >= 1");
    require(is_partition(r), "h_partition_rate: not a partition");
    require_invariant(bundle, mu);
    EntropyReport rep;
    rep.methods.push_back("fekete-infimum");
    const auto nu = markov_to_word(bundle, mu, r.window.end + nmax - 1);
    for (int n = 1; n <= nmax; ++n) {
        const auto joined = range_join(bundle, r, 0, n - 1, limits.join);
        rep.push(n, cond_entropy_partition(bundle, truncate(nu, joined.window.end), joined) / n);
    }
    if (fiberwise_cylindrical(r)) {
        rep.exact_rate = markov_entropy_rate(bundle, mu);
        rep.methods.push_back("markov-chain-rule");
    }
    return rep;
}

struct HPlus {
    double value = std::numeric_limits<double>::infinity();
    std::optional<PositionedPartition> argmin;
    std::size_t argmin_index = 0;  ///< position in the enumeration
    std::size_t candidates = 0;
    bool complete = true;
};

/// h_mu^+(T, U) = min over product partitions Q ⪰ U of the certified upper
/// bound of h_mu(T, Q).
inline HPlus h_plus_estimate(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PositionedCover& u, int nmax,
                             const EntropyLimits& limits = {}) {
    require_invariant(bundle, mu);
    HPlus out;
    auto partitions = product_partitions_finer(bundle, u);
    out.complete = partitions.count() <= limits.enum_max;
    while (out.candidates < limits.enum_max) {
        auto q = partitions.next();
        if (!q) break;
        const double v = h_partition_rate(bundle, mu, *q, nmax, limits).certified_upper;
        if (v < out.value) {
            out.value = v;
            out.argmin = std::move(*q);
            out.argmin_index = out.candidates;
        }
        ++out.candidates;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Power systems

struct PowerSystem {
    int power = 1;
    SymbolicBundle bundle;  ///< fibers over theta^M, alphabet = M-blocks
    PositionedCover cover;  ///< U_0^{M-1} on the block alphabet
    WordList blocks;        ///< block symbol -> base word of length M
};

inline std::vector<std::size_t> power_theta(const ProbBase& base, int power) {
    std::vector<std::size_t> t(base.omega_count());
    for (Fiber w = 0; w < t.size(); ++w) t[w] = base.theta_pow(w, power);
    return t;
}

/// Block recoding of (T^M, U_0^{M-1}). A block symbol at block coordinate j of
/// fiber w stands for base coordinates [jM, jM + M) of fiber w.
inline PowerSystem power_system(const SymbolicBundle& bundle, const PositionedCover& u, int power,
                                std::size_t block_alphabet_max = 256, const EntropyLimits& limits = {}) {
    require(power >= 1, "power_system: M must be >= 1");
    PowerSystem ps;
    ps.power = power;
    const auto& base = bundle.base();
    const Span block_span{0, power};
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        const auto words = admissible_words(bundle, w, block_span);
        ps.blocks.insert(ps.blocks.end(), words.begin(), words.end());
    }
    canonicalize(ps.blocks);
    if (ps.blocks.size() > std::min<std::size_t>(block_alphabet_max, 256))
        fail(ErrorKind::guard, "power_system: " + std::to_string(ps.blocks.size()) + " blocks exceed the block alphabet limit");

    const std::size_t nb = ps.blocks.size();
    std::vector<std::string> names;
    for (const auto& b : ps.blocks) names.push_back(bundle.format(b));
    std::vector<std::vector<bool>> symbol_sets(bundle.omega_count(), std::vector<bool>(nb, false));
    std::vector<Matrix<std::uint8_t>> adjacency;
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        for (std::size_t i = 0; i < nb; ++i) symbol_sets[w][i] = is_admissible(bundle, w, block_span, ps.blocks[i]);
        const Fiber junction = base.theta_pow(w, power - 1);
        Matrix<std::uint8_t> a(nb, nb);
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = 0; j < nb; ++j)
                a(i, j) = bundle.edge(junction, ps.blocks[i].back(), ps.blocks[j].front()) ? 1 : 0;
        adjacency.push_back(std::move(a));
    }
    ProbBase pbase(base.labels(), base.weights(), power_theta(base, power));
    ps.bundle = SymbolicBundle(std::move(pbase), std::move(names), std::move(adjacency), std::move(symbol_sets));

    // Transport U_0^{M-1} to block coordinates.
    const auto joined = range_join(bundle, u, 0, power - 1, limits.join);
    const int first_block = joined.window.begin / power;
    const int end_block = (joined.window.end + power - 1) / power;
    const Span block_window{first_block, end_block};
    const Span base_window{first_block * power, end_block * power};
    ps.cover.window = block_window;
    ps.cover.sections.assign(joined.size(), std::vector<WordList>(bundle.omega_count()));
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        for (const auto& bw : admissible_words(ps.bundle, w, block_window)) {
            Word expanded;
            for (Symbol s : bw) expanded.insert(expanded.end(), ps.blocks[s].begin(), ps.blocks[s].end());
            const Word r = restrict_word(expanded, base_window, joined.window);
            for (std::size_t k = 0; k < joined.size(); ++k)
                if (contains_word(joined.sections[k][w], r)) ps.cover.sections[k][w].push_back(bw);
        }
    }
    ps.cover.product_form = detect_product_form(ps.bundle, ps.cover);
    return ps;
}

/// The same invariant measure seen on the power system.
inline MarkovMeasure power_measure(const SymbolicBundle& bundle, const MarkovMeasure& mu, const PowerSystem& ps) {
    const auto& base = bundle.base();
    const int power = ps.power;
    const std::size_t nb = ps.blocks.size();
    MarkovMeasure out;
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        std::vector<double> p(nb, 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            if (!ps.bundle.allowed(w, static_cast<Symbol>(i))) continue;
            const Word& b = ps.blocks[i];
            double m = mu.starts[w][b[0]];
            for (int t = 0; t + 1 < power; ++t) m *= mu.transitions[base.theta_pow(w, t)](b[t], b[t + 1]);
            p[i] = m;
        }
        const Fiber next = base.theta_pow(w, power);
        Matrix<double> q(nb, nb);
        for (std::size_t i = 0; i < nb; ++i) {
            if (!ps.bundle.allowed(w, static_cast<Symbol>(i))) continue;
            for (std::size_t j = 0; j < nb; ++j) {
                if (!ps.bundle.allowed(next, static_cast<Symbol>(j))) continue;
                const Word& b = ps.blocks[i];
                const Word& c = ps.blocks[j];
                double m = mu.transitions[base.theta_pow(w, power - 1)](b.back(), c[0]);
                for (int t = 0; t + 1 < power; ++t) m *= mu.transitions[base.theta_pow(w, power + t)](c[t], c[t + 1]);
                q(i, j) = m;
            }
        }
        out.starts.push_back(std::move(p));
        out.transitions.push_back(std::move(q));
    }
    return out;
}

}  // namespace rdelab
