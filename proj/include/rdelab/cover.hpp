#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdelab/base.hpp"

namespace rdelab {

/// A finite family of subsets of E, each an omega-indexed union of cylinders on a
/// common coordinate window. sections[k][w] is the sorted list of admissible words
/// of element k in fiber w; empty sections are kept so indices agree across fibers.
struct PositionedCover {
    Span window;
    std::vector<std::vector<WordList>> sections;  // [element][fiber]
    bool product_form = false;                    // every element has the form (Omega x S) ∩ E

    std::size_t size() const noexcept { return sections.size(); }
    const WordList& section(std::size_t element, Fiber w) const { return sections[element][w]; }

    friend bool operator==(const PositionedCover&, const PositionedCover&) = default;
};

/// A cover whose sections are pairwise disjoint in every fiber.
/// Obtain one through as_partition(), which checks disjointness.
struct PositionedPartition : PositionedCover {};

struct JoinLimits {
    std::size_t max_tuples = 1'000'000;
};

namespace detail {

inline std::vector<WordList> admissible_by_fiber(const SymbolicBundle& bundle, Span span) {
    std::vector<WordList> out(bundle.omega_count());
    for (Fiber w = 0; w < bundle.omega_count(); ++w) out[w] = admissible_words(bundle, w, span);
    return out;
}

inline WordList intersect(const WordList& a, const WordList& b) {
    WordList out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline std::size_t saturating_mul(std::size_t a, std::size_t b) {
    std::size_t r;
    if (__builtin_mul_overflow(a, b, &r)) return std::numeric_limits<std::size_t>::max();
    return r;
}

}  // namespace detail

/// Whether every element equals (Omega x S_k) ∩ E for some word set S_k; the
/// candidate S_k is the union of the element's sections over all fibers.
inline bool detect_product_form(const SymbolicBundle& bundle, const PositionedCover& cover) {
    const auto adm = detail::admissible_by_fiber(bundle, cover.window);
    for (const auto& element : cover.sections) {
        WordList all;
        for (const auto& s : element) all.insert(all.end(), s.begin(), s.end());
        canonicalize(all);
        for (Fiber w = 0; w < element.size(); ++w)
            if (detail::intersect(all, adm[w]) != element[w]) return false;
    }
    return true;
}

/// Builds a cover from raw per-fiber word lists: sorts, removes duplicates and
/// drops words that are not admissible in their fiber. Covering is not checked
/// here; see check_cover().
inline PositionedCover make_cover(const SymbolicBundle& bundle, Span window,
                                  std::vector<std::vector<WordList>> sections) {
    require(window.begin >= 0 && window.length() >= 1, "cover window must be nonempty and start at >= 0");
    PositionedCover c;
    c.window = window;
    for (auto& element : sections) {
        require(element.size() == bundle.omega_count(), "cover element needs one section per fiber");
        for (Fiber w = 0; w < element.size(); ++w) {
            auto& s = element[w];
            for (const auto& word : s)
                require(static_cast<int>(word.size()) == window.length(), "word length differs from window");
            std::erase_if(s, [&](const Word& word) { return !is_admissible(bundle, w, window, word); });
            canonicalize(s);
        }
    }
    c.sections = std::move(sections);
    c.product_form = detect_product_form(bundle, c);
    return c;
}

/// Product-form cover {(Omega x S_k) ∩ E}.
inline PositionedCover make_product_cover(const SymbolicBundle& bundle, Span window,
                                          const std::vector<WordList>& element_words) {
    std::vector<std::vector<WordList>> sections;
    for (const auto& words : element_words) sections.emplace_back(bundle.omega_count(), words);
    return make_cover(bundle, window, std::move(sections));
}

/// Partition into the cylinders of `span` (one element per word admissible in some fiber).
inline PositionedPartition cylinder_partition(const SymbolicBundle& bundle, Span span) {
    WordList all;
    for (const auto& words : detail::admissible_by_fiber(bundle, span)) all.insert(all.end(), words.begin(), words.end());
    canonicalize(all);
    std::vector<WordList> elements;
    for (const auto& w : all) elements.push_back({w});
    PositionedPartition p;
    static_cast<PositionedCover&>(p) = make_product_cover(bundle, span, elements);
    return p;
}

inline PositionedPartition zero_cylinder_partition(const SymbolicBundle& bundle) {
    return cylinder_partition(bundle, {0, 1});
}

/// The one-element cover {E}.
inline PositionedPartition trivial_partition(const SymbolicBundle& bundle, Span span = {0, 1}) {
    PositionedPartition p;
    p.window = span;
    p.sections = {detail::admissible_by_fiber(bundle, span)};
    p.product_form = true;
    return p;
}

inline Diagnostics check_cover(const SymbolicBundle& bundle, const PositionedCover& cover) {
    Diagnostics d;
    const auto adm = detail::admissible_by_fiber(bundle, cover.window);
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        WordList covered;
        for (const auto& element : cover.sections) covered.insert(covered.end(), element[w].begin(), element[w].end());
        canonicalize(covered);
        for (const auto& word : adm[w])
            if (!contains_word(covered, word)) {
                d.add("fiber '" + bundle.base().label(w) + "': word " + bundle.format(word) + " is not covered");
                break;
            }
    }
    return d;
}

inline bool is_partition(const PositionedCover& cover) {
    if (cover.sections.empty()) return false;
    const std::size_t fibers = cover.sections.front().size();
    for (Fiber w = 0; w < fibers; ++w) {
        std::size_t total = 0;
        WordList all;
        for (const auto& element : cover.sections) {
            total += element[w].size();
            all.insert(all.end(), element[w].begin(), element[w].end());
        }
        canonicalize(all);
        if (all.size() != total) return false;
    }
    return true;
}

inline PositionedPartition as_partition(const SymbolicBundle& bundle, const PositionedCover& cover) {
    const auto d = check_cover(bundle, cover);
    require(d.ok(), "not a cover: " + (d.ok() ? std::string() : d.issues.front()));
    require(is_partition(cover), "cover sections are not pairwise disjoint");
    PositionedPartition p;
    static_cast<PositionedCover&>(p) = cover;
    return p;
}

/// Re-expresses the cover on a larger window: a hull word belongs to an element
/// when its restriction to the cover window does. Only admissible hull words occur.
inline PositionedCover refine(const SymbolicBundle& bundle, const PositionedCover& cover, Span to) {
    require(to.contains(cover.window), "refine: target window must contain the cover window");
    if (to == cover.window) return cover;
    PositionedCover out;
    out.window = to;
    out.product_form = cover.product_form;
    out.sections.assign(cover.size(), std::vector<WordList>(bundle.omega_count()));
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        for (const auto& word : admissible_words(bundle, w, to)) {
            const Word r = restrict_word(word, to, cover.window);
            for (std::size_t k = 0; k < cover.size(); ++k)
                if (contains_word(cover.sections[k][w], r)) out.sections[k][w].push_back(word);
        }
    }
    return out;
}

/// U ⪰ V: each element of U lies inside a single element of V (in every fiber).
inline bool is_finer(const SymbolicBundle& bundle, const PositionedCover& u, const PositionedCover& v) {
    const Span h = hull(u.window, v.window);
    const auto ur = refine(bundle, u, h);
    const auto vr = refine(bundle, v, h);
    for (const auto& element : ur.sections) {
        bool inside_some = false;
        for (const auto& target : vr.sections) {
            bool inside = true;
            for (Fiber w = 0; w < element.size() && inside; ++w)
                inside = std::includes(target[w].begin(), target[w].end(), element[w].begin(), element[w].end());
            if (inside) {
                inside_some = true;
                break;
            }
        }
        if (!inside_some) return false;
    }
    return true;
}

/// U ∨ V, elements indexed by pairs (i, j) in row-major order; pairs whose
/// sections are empty in every fiber are retained.
inline PositionedCover join(const SymbolicBundle& bundle, const PositionedCover& u, const PositionedCover& v) {
    const Span h = hull(u.window, v.window);
    const auto ur = refine(bundle, u, h);
    const auto vr = refine(bundle, v, h);
    PositionedCover out;
    out.window = h;
    for (const auto& a : ur.sections)
        for (const auto& b : vr.sections) {
            std::vector<WordList> element(bundle.omega_count());
            for (Fiber w = 0; w < element.size(); ++w) element[w] = detail::intersect(a[w], b[w]);
            out.sections.push_back(std::move(element));
        }
    out.product_form = u.product_form && v.product_form ? true : detect_product_form(bundle, out);
    return out;
}

/// Theta^{-i} U: the section at fiber w is U's section at theta^i w, moved i
/// coordinates to the right.
inline PositionedCover pullback(const SymbolicBundle& bundle, const PositionedCover& u, int i) {
    require(i >= 0, "pullback: shift must be >= 0");
    PositionedCover out;
    out.window = u.window.shifted(i);
    out.product_form = u.product_form;
    out.sections.reserve(u.size());
    for (const auto& element : u.sections) {
        std::vector<WordList> moved(bundle.omega_count());
        for (Fiber w = 0; w < moved.size(); ++w) moved[w] = element[bundle.base().theta_pow(w, i)];
        out.sections.push_back(std::move(moved));
    }
    return out;
}

/// U_M^N = Theta^{-M}U ∨ ... ∨ Theta^{-N}U on window [s+M, s+N+m).
///
/// Elements are the index tuples (k_M, ..., k_N) that are nonempty in at least
/// one fiber, in lexicographic tuple order. Tuples empty in every fiber are the
/// empty set and are pruned.
inline PositionedCover range_join(const SymbolicBundle& bundle, const PositionedCover& u, int first, int last,
                                  JoinLimits limits = {}) {
    require(0 <= first && first <= last, "range_join: need 0 <= M <= N");
    if (first == last) return pullback(bundle, u, first);

    const int steps = last - first + 1;
    std::size_t tuples = 1;
    for (int j = 0; j < steps; ++j) tuples = detail::saturating_mul(tuples, u.size());
    if (tuples > limits.max_tuples)
        fail(ErrorKind::guard, "range_join: " + std::to_string(u.size()) + "^" + std::to_string(steps) +
                                   " index tuples exceed the limit of " + std::to_string(limits.max_tuples));

    const Span out_window{u.window.begin + first, u.window.end + last};
    const auto& base = bundle.base();
    std::map<std::vector<std::uint32_t>, std::vector<WordList>> cells;
    std::vector<std::uint32_t> tuple(static_cast<std::size_t>(steps));
    std::vector<std::vector<std::uint32_t>> containing(static_cast<std::size_t>(steps));

    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        std::vector<Fiber> fiber_at(static_cast<std::size_t>(steps));
        for (int j = 0; j < steps; ++j) fiber_at[static_cast<std::size_t>(j)] = base.theta_pow(w, first + j);
        for (const auto& word : admissible_words(bundle, w, out_window)) {
            bool nonempty = true;
            for (int j = 0; j < steps && nonempty; ++j) {
                const Span piece = u.window.shifted(first + j);
                const Word r = restrict_word(word, out_window, piece);
                auto& ks = containing[static_cast<std::size_t>(j)];
                ks.clear();
                for (std::size_t k = 0; k < u.size(); ++k)
                    if (contains_word(u.sections[k][fiber_at[static_cast<std::size_t>(j)]], r))
                        ks.push_back(static_cast<std::uint32_t>(k));
                nonempty = !ks.empty();
            }
            if (!nonempty) continue;  // word uncovered; check_cover reports this
            // Every tuple drawn from the containing sets holds this word.
            std::vector<std::size_t> digit(static_cast<std::size_t>(steps), 0);
            while (true) {
                for (std::size_t j = 0; j < digit.size(); ++j) tuple[j] = containing[j][digit[j]];
                auto [it, inserted] = cells.try_emplace(tuple);
                if (inserted) it->second.resize(bundle.omega_count());
                it->second[w].push_back(word);
                std::size_t j = digit.size();
                while (j > 0) {
                    --j;
                    if (++digit[j] < containing[j].size()) break;
                    digit[j] = 0;
                    if (j == 0) goto next_word;
                }
            }
        next_word:;
        }
    }

    PositionedCover out;
    out.window = out_window;
    out.sections.reserve(cells.size());
    for (auto& [key, element] : cells) out.sections.push_back(std::move(element));
    out.product_form = u.product_form;
    return out;
}

/// Lazily enumerates the product-form partitions finer than a product-form cover
/// U: each word admissible in some fiber is assigned to one of the elements of U
/// containing it. Assignment vectors are visited in lexicographic order (words in
/// lexicographic order, element indices ascending, last word varying fastest).
/// Yielded partitions keep U's element indexing.
class ProductPartitionEnumerator {
public:
    ProductPartitionEnumerator(const SymbolicBundle& bundle, const PositionedCover& u)
        : window_(u.window), elements_(u.size()) {
        require(u.product_form, "product_partitions_finer: cover is not product-form");
        adm_ = detail::admissible_by_fiber(bundle, u.window);
        std::vector<WordList> product_sets(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            for (const auto& s : u.sections[k]) product_sets[k].insert(product_sets[k].end(), s.begin(), s.end());
            canonicalize(product_sets[k]);
        }
        for (const auto& words : adm_) words_.insert(words_.end(), words.begin(), words.end());
        canonicalize(words_);
        choices_.resize(words_.size());
        count_ = 1;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            for (std::size_t k = 0; k < u.size(); ++k)
                if (contains_word(product_sets[k], words_[i])) choices_[i].push_back(k);
            require(!choices_[i].empty(), "cover does not cover word " + bundle.format(words_[i]));
            count_ = detail::saturating_mul(count_, choices_[i].size());
        }
        digits_.assign(words_.size(), 0);
    }

    /// Number of partitions (saturates at SIZE_MAX).
    std::size_t count() const noexcept { return count_; }

    std::optional<PositionedPartition> next() {
        if (done_) return std::nullopt;
        PositionedPartition p;
        p.window = window_;
        p.product_form = true;
        std::vector<WordList> sets(elements_);
        for (std::size_t i = 0; i < words_.size(); ++i) sets[choices_[i][digits_[i]]].push_back(words_[i]);
        p.sections.resize(elements_);
        for (std::size_t k = 0; k < elements_; ++k) {
            p.sections[k].resize(adm_.size());
            for (Fiber w = 0; w < adm_.size(); ++w) p.sections[k][w] = detail::intersect(sets[k], adm_[w]);
        }
        advance();
        return p;
    }

    /// All partitions; throws a guard error when more than `max_count` exist.
    std::vector<PositionedPartition> collect(std::size_t max_count = 100'000) {
        if (count_ > max_count)
            fail(ErrorKind::guard, "product_partitions_finer: " + std::to_string(count_) +
                                       " partitions exceed the limit of " + std::to_string(max_count) +
                                       "; consume the enumerator lazily");
        std::vector<PositionedPartition> out;
        out.reserve(count_);
        while (auto p = next()) out.push_back(std::move(*p));
        return out;
    }

private:
    void advance() {
        std::size_t i = digits_.size();
        while (i > 0) {
            --i;
            if (++digits_[i] < choices_[i].size()) return;
            digits_[i] = 0;
        }
        done_ = true;
    }

    Span window_;
    std::size_t elements_;
    std::vector<WordList> adm_;
    WordList words_;
    std::vector<std::vector<std::size_t>> choices_;
    std::vector<std::size_t> digits_;
    std::size_t count_ = 0;
    bool done_ = false;
};

inline ProductPartitionEnumerator product_partitions_finer(const SymbolicBundle& bundle, const PositionedCover& u) {
    return ProductPartitionEnumerator(bundle, u);
}

}  // namespace rdelab
