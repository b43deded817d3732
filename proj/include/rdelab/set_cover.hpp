#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdelab/base.hpp"
#include "rdelab/cover.hpp"

namespace rdelab {

/// Fixed-size bitset sized at run time.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    std::size_t size() const noexcept { return n_; }
    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
    bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    bool any() const {
        return std::any_of(words_.begin(), words_.end(), [](auto w) { return w != 0; });
    }
    std::size_t count_and(const Bitset& o) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) c += static_cast<std::size_t>(std::popcount(words_[i] & o.words_[i]));
        return c;
    }
    bool intersects(const Bitset& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }
    bool subset_of(const Bitset& o) const {
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }
    Bitset& operator|=(const Bitset& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    Bitset& operator&=(const Bitset& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    Bitset& subtract(const Bitset& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
        return *this;
    }
    void fill() {
        for (std::size_t i = 0; i < n_; ++i) set(i);
    }

    friend bool operator==(const Bitset&, const Bitset&) = default;

    std::size_t hash() const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (auto w : words_) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

struct BitsetHash {
    std::size_t operator()(const Bitset& b) const noexcept { return b.hash(); }
};

struct SetCoverLimits {
    std::size_t universe_max = 4096;
    std::size_t elements_max = 64;  ///< residual sets after reductions
    std::size_t memo_max = 2'000'000;
};

struct SetCoverResult {
    std::size_t size = 0;
    std::vector<std::size_t> chosen;  ///< indices into the input sets, ascending
};

/// Greedy cover: repeatedly take the set covering the most uncovered elements
/// (lowest index on ties).
inline std::vector<std::size_t> greedy_set_cover(std::size_t universe, const std::vector<Bitset>& sets) {
    Bitset uncovered(universe);
    uncovered.fill();
    std::vector<std::size_t> chosen;
    while (uncovered.any()) {
        std::size_t best = sets.size(), gain = 0;
        for (std::size_t k = 0; k < sets.size(); ++k) {
            const std::size_t g = sets[k].count_and(uncovered);
            if (g > gain) {
                gain = g;
                best = k;
            }
        }
        if (best == sets.size()) fail(ErrorKind::precondition, "universe uncovered");
        chosen.push_back(best);
        uncovered.subtract(sets[best]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

namespace detail {

struct CoverSearch {
    const std::vector<Bitset>& sets;
    std::size_t best;
    std::vector<std::size_t> best_choice;
    std::vector<std::size_t> stack;
    std::unordered_map<Bitset, std::size_t, BitsetHash> memo;
    std::size_t memo_max;

    void run(const Bitset& uncovered) {
        const std::size_t depth = stack.size();
        if (!uncovered.any()) {
            if (depth < best) {
                best = depth;
                best_choice = stack;
            }
            return;
        }
        std::size_t widest = 0;
        for (const auto& s : sets) widest = std::max(widest, s.count_and(uncovered));
        const std::size_t remaining = uncovered.count();
        const std::size_t lower = depth + (remaining + widest - 1) / widest;
        if (lower >= best) return;

        if (auto it = memo.find(uncovered); it != memo.end()) {
            if (it->second <= depth) return;
            it->second = depth;
        } else if (memo.size() < memo_max) {
            memo.emplace(uncovered, depth);
        }

        // Branch on the uncovered element with the fewest covering sets.
        std::size_t pivot = 0, fewest = sets.size() + 1;
        for (std::size_t e = 0; e < uncovered.size(); ++e) {
            if (!uncovered.test(e)) continue;
            std::size_t c = 0;
            for (const auto& s : sets) c += s.test(e) ? 1 : 0;
            if (c < fewest) {
                fewest = c;
                pivot = e;
                if (c <= 1) break;
            }
        }
        std::vector<std::pair<std::size_t, std::size_t>> options;  // (-gain, index)
        for (std::size_t k = 0; k < sets.size(); ++k)
            if (sets[k].test(pivot)) options.emplace_back(sets[k].count_and(uncovered), k);
        std::stable_sort(options.begin(), options.end(), [](auto a, auto b) { return a.first > b.first; });
        for (const auto& [gain, k] : options) {
            Bitset next = uncovered;
            next.subtract(sets[k]);
            stack.push_back(k);
            run(next);
            stack.pop_back();
        }
    }
};

}  // namespace detail

/// Exact minimum set cover by branch and bound.
///
/// Preprocessing removes empty, duplicate and dominated sets and repeatedly
/// takes sets that are the only cover of some element. The residual instance is
/// searched depth-first, seeded with the greedy bound, branching on the element
/// with the fewest covering sets (widest set first), pruning on the
/// ceil(remaining / widest) lower bound and on memoized uncovered states.
inline SetCoverResult exact_set_cover(std::size_t universe, const std::vector<Bitset>& sets,
                                      SetCoverLimits limits = {}) {
    if (universe > limits.universe_max)
        fail(ErrorKind::guard, "set cover universe of " + std::to_string(universe) + " exceeds the limit of " +
                                   std::to_string(limits.universe_max));
    Bitset all(universe);
    for (const auto& s : sets) all |= s;
    if (all.count() != universe) fail(ErrorKind::precondition, "universe uncovered");
    if (universe == 0) return {};

    Bitset remaining(universe);
    remaining.fill();
    std::vector<std::size_t> taken;
    std::vector<std::size_t> live(sets.size());
    std::iota(live.begin(), live.end(), 0);
    std::vector<Bitset> trimmed = sets;

    auto prune = [&]() {
        for (auto k : live) trimmed[k] &= remaining;
        std::erase_if(live, [&](std::size_t k) { return !trimmed[k].any(); });
        std::stable_sort(live.begin(), live.end(),
                         [&](std::size_t a, std::size_t b) { return trimmed[a].count() > trimmed[b].count(); });
        std::vector<std::size_t> kept;
        for (auto k : live) {
            bool dominated = false;
            for (auto j : kept)
                if (trimmed[k].subset_of(trimmed[j])) {
                    dominated = true;
                    break;
                }
            if (!dominated) kept.push_back(k);
        }
        live = std::move(kept);
    };

    prune();
    bool changed = true;
    while (changed && remaining.any()) {
        changed = false;
        for (std::size_t e = 0; e < universe; ++e) {
            if (!remaining.test(e)) continue;
            std::size_t holder = sets.size(), c = 0;
            for (auto k : live)
                if (trimmed[k].test(e)) {
                    ++c;
                    holder = k;
                }
            if (c == 1) {
                taken.push_back(holder);
                remaining.subtract(trimmed[holder]);
                changed = true;
            }
        }
        if (changed) prune();
    }

    SetCoverResult result;
    if (remaining.any()) {
        if (live.size() > limits.elements_max)
            fail(ErrorKind::guard, "set cover has " + std::to_string(live.size()) +
                                       " residual sets, above the limit of " + std::to_string(limits.elements_max));
        std::vector<Bitset> residual;
        for (auto k : live) residual.push_back(trimmed[k]);
        // Greedy on the residual seeds the bound.
        std::vector<std::size_t> greedy;
        {
            Bitset u = remaining;
            while (u.any()) {
                std::size_t best = 0, gain = 0;
                for (std::size_t k = 0; k < residual.size(); ++k)
                    if (auto g = residual[k].count_and(u); g > gain) {
                        gain = g;
                        best = k;
                    }
                greedy.push_back(best);
                u.subtract(residual[best]);
            }
        }
        detail::CoverSearch search{residual, greedy.size() + 1, {}, {}, {}, limits.memo_max};
        search.run(remaining);
        if (search.best > greedy.size()) search.best_choice = greedy;
        for (auto k : search.best_choice) taken.push_back(live[k]);
    }
    std::sort(taken.begin(), taken.end());
    result.chosen = std::move(taken);
    result.size = result.chosen.size();
    return result;
}

/// Minimal number of elements of C whose sections cover the admissible words of
/// fiber w on C's window.
inline SetCoverResult min_subcover_count(const SymbolicBundle& bundle, Fiber w, const PositionedCover& c,
                                         SetCoverLimits limits = {}) {
    const WordList universe = admissible_words(bundle, w, c.window);
    if (universe.size() > limits.universe_max)
        fail(ErrorKind::guard, "cover universe of " + std::to_string(universe.size()) + " words exceeds the limit of " +
                                   std::to_string(limits.universe_max));
    std::vector<Bitset> sets;
    sets.reserve(c.size());
    for (const auto& element : c.sections) {
        Bitset b(universe.size());
        for (const auto& word : element[w]) {
            const auto it = std::lower_bound(universe.begin(), universe.end(), word);
            if (it != universe.end() && *it == word) b.set(static_cast<std::size_t>(it - universe.begin()));
        }
        sets.push_back(std::move(b));
    }
    try {
        return exact_set_cover(universe.size(), sets, limits);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::precondition)
            fail(ErrorKind::precondition, "universe uncovered in fiber '" + bundle.base().label(w) + "'");
        throw;
    }
}

/// N(T, w, U, n): minimal subcover of U_0^{n-1} over the fiber w.
inline std::size_t cover_count(const SymbolicBundle& bundle, Fiber w, const PositionedCover& u, int n,
                               SetCoverLimits limits = {}, JoinLimits join_limits = {}) {
    require(n >= 1, "cover_count: n must be >= 1");
    return min_subcover_count(bundle, w, range_join(bundle, u, 0, n - 1, join_limits), limits).size;
}

/// N(U): fewest elements of U whose union contains E (all fibers at once).
inline SetCoverResult global_min_subcover(const SymbolicBundle& bundle, const PositionedCover& u,
                                          SetCoverLimits limits = {}) {
    std::vector<WordList> adm(bundle.omega_count());
    std::vector<std::size_t> offset(bundle.omega_count() + 1, 0);
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        adm[w] = admissible_words(bundle, w, u.window);
        offset[w + 1] = offset[w] + adm[w].size();
    }
    const std::size_t universe = offset.back();
    std::vector<Bitset> sets;
    for (const auto& element : u.sections) {
        Bitset b(universe);
        for (Fiber w = 0; w < bundle.omega_count(); ++w)
            for (const auto& word : element[w]) {
                const auto it = std::lower_bound(adm[w].begin(), adm[w].end(), word);
                if (it != adm[w].end() && *it == word) b.set(offset[w] + static_cast<std::size_t>(it - adm[w].begin()));
            }
        sets.push_back(std::move(b));
    }
    return exact_set_cover(universe, sets, limits);
}

struct MultiSeparated {
    Span span;           ///< coordinates of the returned words
    WordList words;      ///< B_n(w), in selection (lexicographic) order
    std::size_t cover_count = 0;  ///< N(T, w, U, n)
    std::size_t partitions = 0;   ///< K
    std::size_t bound = 0;        ///< floor(N / K)
};

/// A maximal set of admissible words of fiber w such that no atom of
/// (R_l)_0^{n-1}(w) contains two of them, for every l. Words are scanned in
/// lexicographic order and kept greedily, so the result is deterministic and
/// non-extendable. Its size is checked against floor(N(T,w,U,n) / K).
///
/// `universe_span`, when given, must contain the joined windows; words then
/// carry the extra coordinates (each is a point representative of its atom).
inline MultiSeparated maximal_multi_separated(const SymbolicBundle& bundle, Fiber w,
                                              const std::vector<PositionedPartition>& partitions,
                                              const PositionedCover& u, int n,
                                              std::optional<Span> universe_span = std::nullopt,
                                              SetCoverLimits limits = {}, JoinLimits join_limits = {}) {
    require(!partitions.empty(), "maximal_multi_separated: partition list is empty");
    require(n >= 1, "maximal_multi_separated: n must be >= 1");
    for (std::size_t l = 0; l < partitions.size(); ++l)
        if (!is_finer(bundle, partitions[l], u))
            fail(ErrorKind::precondition, "finer-than violation: partition " + std::to_string(l + 1) +
                                              " is not finer than the cover");

    std::vector<PositionedCover> joined;
    Span span = u.window;
    for (const auto& r : partitions) {
        joined.push_back(range_join(bundle, r, 0, n - 1, join_limits));
        span = hull(span, joined.back().window);
    }
    const auto u_joined = range_join(bundle, u, 0, n - 1, join_limits);
    span = hull(span, u_joined.window);
    if (universe_span) {
        require(universe_span->contains(span), "maximal_multi_separated: universe span too small");
        span = *universe_span;
    }

    // Atom lookup per partition: restricted word -> element index.
    std::vector<std::map<Word, std::size_t>> atom_of(joined.size());
    for (std::size_t l = 0; l < joined.size(); ++l)
        for (std::size_t k = 0; k < joined[l].size(); ++k)
            for (const auto& word : joined[l].sections[k][w]) {
                const bool fresh = atom_of[l].emplace(word, k).second;
                if (!fresh) fail(ErrorKind::precondition, "partition " + std::to_string(l + 1) + " is not disjoint");
            }

    MultiSeparated out;
    out.span = span;
    out.partitions = partitions.size();
    std::vector<std::vector<bool>> used(joined.size());
    for (std::size_t l = 0; l < joined.size(); ++l) used[l].assign(joined[l].size(), false);

    for (const auto& word : admissible_words(bundle, w, span)) {
        std::vector<std::size_t> atoms(joined.size());
        bool free = true;
        for (std::size_t l = 0; l < joined.size() && free; ++l) {
            const auto it = atom_of[l].find(restrict_word(word, span, joined[l].window));
            if (it == atom_of[l].end()) fail(ErrorKind::precondition, "partition does not cover its fiber");
            atoms[l] = it->second;
            free = !used[l][atoms[l]];
        }
        if (!free) continue;
        for (std::size_t l = 0; l < joined.size(); ++l) used[l][atoms[l]] = true;
        out.words.push_back(word);
    }

    out.cover_count = min_subcover_count(bundle, w, u_joined, limits).size;
    out.bound = out.cover_count / out.partitions;
    if (out.words.size() < out.bound)
        fail(ErrorKind::internal, "maximal separated set of size " + std::to_string(out.words.size()) +
                                      " is below floor(N/K) = " + std::to_string(out.bound));
    return out;
}

}  // namespace rdelab
