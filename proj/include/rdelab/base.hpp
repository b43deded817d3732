#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rdelab/error.hpp"
#include "rdelab/matrix.hpp"
#include "rdelab/spectral.hpp"

namespace rdelab {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;
/// Sorted, duplicate-free list of words; the canonical form of a cylinder union.
using WordList = std::vector<Word>;
using Fiber = std::size_t;

/// Half-open coordinate interval [begin, end), begin >= 0.
struct Span {
    int begin = 0;
    int end = 0;

    int length() const noexcept { return end - begin; }
    bool empty() const noexcept { return end <= begin; }
    bool contains(Span other) const noexcept { return begin <= other.begin && other.end <= end; }
    Span shifted(int by) const noexcept { return {begin + by, end + by}; }

    friend bool operator==(Span, Span) = default;
};

inline Span hull(Span a, Span b) { return {std::min(a.begin, b.begin), std::max(a.end, b.end)}; }

/// Restriction of a word living on `from` to the sub-window `to`.
inline Word restrict_word(const Word& w, Span from, Span to) {
    const auto first = w.begin() + (to.begin - from.begin);
    return Word(first, first + to.length());
}

inline bool contains_word(const WordList& list, const Word& w) {
    return std::binary_search(list.begin(), list.end(), w);
}

inline void canonicalize(WordList& list) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
}

/// Finite driving system (Omega, P, theta) with theta a permutation.
class ProbBase {
public:
    ProbBase() = default;
    ProbBase(std::vector<std::string> labels, std::vector<double> weights, std::vector<std::size_t> theta)
        : labels_(std::move(labels)), weights_(std::move(weights)), theta_(std::move(theta)) {
        require(!labels_.empty(), "Omega must be nonempty");
        require(weights_.size() == labels_.size(), "P has " + std::to_string(weights_.size()) +
                                                       " entries, expected " + std::to_string(labels_.size()));
        require(theta_.size() == labels_.size(), "theta has " + std::to_string(theta_.size()) +
                                                     " entries, expected " + std::to_string(labels_.size()));
        for (std::size_t t : theta_) require(t < labels_.size(), "theta image out of range");
        std::vector<bool> hit(theta_.size(), false);
        bijective_ = true;
        for (std::size_t t : theta_) {
            if (hit[t]) bijective_ = false;
            hit[t] = true;
        }
        if (bijective_) build_cycles();
    }

    std::size_t omega_count() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(Fiber w) const { return labels_[w]; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double weight(Fiber w) const { return weights_[w]; }
    const std::vector<std::size_t>& theta() const noexcept { return theta_; }
    Fiber theta(Fiber w) const { return theta_[w]; }
    bool theta_is_bijection() const noexcept { return bijective_; }

    /// theta^k(w) for k >= 0.
    Fiber theta_pow(Fiber w, long k) const {
        if (bijective_) {
            const auto& cyc = cycles_[cycle_id_[w]];
            const long len = static_cast<long>(cyc.size());
            return cyc[static_cast<std::size_t>((static_cast<long>(cycle_pos_[w]) + k % len + len) % len)];
        }
        require(k >= 0, "negative theta power on non-invertible theta");
        for (long i = 0; i < k; ++i) w = theta_[w];
        return w;
    }

    /// theta-cycles, each listed as (w, theta w, ...) from its smallest member.
    const std::vector<std::vector<Fiber>>& cycles() const {
        require(bijective_, "theta is not a bijection");
        return cycles_;
    }

    std::size_t find(const std::string& name) const {
        const auto it = std::find(labels_.begin(), labels_.end(), name);
        if (it == labels_.end()) fail(ErrorKind::unknown_name, "unknown fiber '" + name + "'");
        return static_cast<std::size_t>(it - labels_.begin());
    }

private:
    void build_cycles() {
        const std::size_t n = theta_.size();
        cycle_id_.assign(n, 0);
        cycle_pos_.assign(n, 0);
        std::vector<bool> seen(n, false);
        for (Fiber start = 0; start < n; ++start) {
            if (seen[start]) continue;
            std::vector<Fiber> cyc;
            for (Fiber w = start; !seen[w]; w = theta_[w]) {
                seen[w] = true;
                cycle_id_[w] = cycles_.size();
                cycle_pos_[w] = cyc.size();
                cyc.push_back(w);
            }
            cycles_.push_back(std::move(cyc));
        }
    }

    std::vector<std::string> labels_;
    std::vector<double> weights_;
    std::vector<std::size_t> theta_;
    bool bijective_ = false;
    std::vector<std::vector<Fiber>> cycles_;
    std::vector<std::size_t> cycle_id_;
    std::vector<std::size_t> cycle_pos_;
};

/// Two-sided random subshift of finite type: fiber w is the set of sequences x with
/// x_i in S(theta^i w) and A_{theta^i w}(x_i, x_{i+1}) = 1. The symbol sets S default
/// to the full alphabet; block recodings (power systems) restrict them per fiber.
class SymbolicBundle {
public:
    SymbolicBundle() = default;
    SymbolicBundle(ProbBase base, std::vector<std::string> alphabet, std::vector<Matrix<std::uint8_t>> adjacency,
                   std::vector<std::vector<bool>> symbol_sets = {})
        : base_(std::move(base)),
          alphabet_(std::move(alphabet)),
          adjacency_(std::move(adjacency)),
          symbol_sets_(std::move(symbol_sets)) {
        require(!alphabet_.empty(), "alphabet must be nonempty");
        require(alphabet_.size() <= 256, "alphabet larger than 256 symbols");
        require(adjacency_.size() == base_.omega_count(), "one adjacency matrix per fiber required");
        for (Fiber w = 0; w < adjacency_.size(); ++w)
            require(adjacency_[w].rows() == alphabet_.size() && adjacency_[w].cols() == alphabet_.size(),
                    "adjacency of fiber '" + base_.label(w) + "' is not " + std::to_string(alphabet_.size()) +
                        "x" + std::to_string(alphabet_.size()));
        if (symbol_sets_.empty()) symbol_sets_.assign(base_.omega_count(), std::vector<bool>(alphabet_.size(), true));
        require(symbol_sets_.size() == base_.omega_count(), "one symbol set per fiber required");
        for (const auto& s : symbol_sets_) require(s.size() == alphabet_.size(), "symbol set size mismatch");
    }

    const ProbBase& base() const noexcept { return base_; }
    std::size_t alphabet_size() const noexcept { return alphabet_.size(); }
    const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
    std::size_t omega_count() const noexcept { return base_.omega_count(); }
    const Matrix<std::uint8_t>& adjacency(Fiber w) const { return adjacency_[w]; }
    const std::vector<Matrix<std::uint8_t>>& adjacency() const noexcept { return adjacency_; }
    const std::vector<std::vector<bool>>& symbol_sets() const noexcept { return symbol_sets_; }

    bool allowed(Fiber w, Symbol a) const { return symbol_sets_[w][a]; }

    /// Transition a -> b from fiber w to fiber theta(w).
    bool edge(Fiber w, Symbol a, Symbol b) const {
        return adjacency_[w](a, b) != 0 && symbol_sets_[w][a] && symbol_sets_[base_.theta(w)][b];
    }

    /// Effective 0/1 transfer matrix of fiber w (edge() as a matrix).
    Matrix<double> transfer(Fiber w) const {
        const std::size_t d = alphabet_size();
        Matrix<double> m(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                m(a, b) = edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b)) ? 1.0 : 0.0;
        return m;
    }

    Symbol find_symbol(const std::string& name) const {
        const auto it = std::find(alphabet_.begin(), alphabet_.end(), name);
        if (it == alphabet_.end()) fail(ErrorKind::unknown_name, "unknown symbol '" + name + "'");
        return static_cast<Symbol>(it - alphabet_.begin());
    }

    std::string format(const Word& w) const {
        bool single = std::all_of(alphabet_.begin(), alphabet_.end(), [](const auto& s) { return s.size() == 1; });
        std::string out;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!single && i) out += '.';
            out += alphabet_[w[i]];
        }
        return out;
    }

private:
    ProbBase base_;
    std::vector<std::string> alphabet_;
    std::vector<Matrix<std::uint8_t>> adjacency_;
    std::vector<std::vector<bool>> symbol_sets_;
};

// ---------------------------------------------------------------------------
// Validation

struct Diagnostics {
    std::vector<std::string> issues;

    bool ok() const noexcept { return issues.empty(); }
    void add(std::string issue) { issues.push_back(std::move(issue)); }
};

inline Diagnostics validate(const ProbBase& base) {
    Diagnostics d;
    if (!base.theta_is_bijection()) d.add("theta is not a bijection");
    double total = 0.0;
    for (Fiber w = 0; w < base.omega_count(); ++w) {
        if (!(base.weight(w) > 0.0)) d.add("P(" + base.label(w) + ") is not strictly positive");
        total += base.weight(w);
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "P sums to " << total << ", not 1";
        d.add(os.str());
    }
    bool invariant = true;
    for (Fiber w = 0; w < base.omega_count(); ++w)
        if (std::abs(base.weight(base.theta(w)) - base.weight(w)) > 1e-12) invariant = false;
    if (!invariant) d.add("P not theta-invariant");
    return d;
}

/// Checks every invariant of the bundle; never throws.
inline Diagnostics validate(const SymbolicBundle& bundle) {
    Diagnostics d = validate(bundle.base());
    const auto& base = bundle.base();
    const std::size_t n = bundle.alphabet_size();
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        const Fiber next = base.theta(w);
        bool any_symbol = false;
        for (std::size_t a = 0; a < n; ++a) {
            if (!bundle.allowed(w, static_cast<Symbol>(a))) continue;
            any_symbol = true;
            bool row = false;
            for (std::size_t b = 0; b < n; ++b) row = row || bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b));
            if (!row)
                d.add("dead symbol: fiber '" + base.label(w) + "' row '" + bundle.alphabet()[a] +
                      "' has no admissible successor");
        }
        if (!any_symbol) d.add("fiber '" + base.label(w) + "' has no symbols");
        for (std::size_t b = 0; b < n; ++b) {
            if (!bundle.allowed(next, static_cast<Symbol>(b))) continue;
            bool col = false;
            for (std::size_t a = 0; a < n; ++a) col = col || bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b));
            if (!col)
                d.add("dead symbol: fiber '" + base.label(w) + "' column '" + bundle.alphabet()[b] +
                      "' has no admissible predecessor");
        }
    }
    return d;
}

inline void require_valid(const SymbolicBundle& bundle) {
    const auto d = validate(bundle);
    if (!d.ok()) fail(ErrorKind::precondition, "invalid bundle: " + d.issues.front());
}

// ---------------------------------------------------------------------------
// Words

/// Whether w, placed on `span` of fiber `w0`, is a nonempty cylinder section.
inline bool is_admissible(const SymbolicBundle& bundle, Fiber w0, Span span, const Word& w) {
    if (static_cast<int>(w.size()) != span.length()) return false;
    Fiber f = bundle.base().theta_pow(w0, span.begin);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] >= bundle.alphabet_size() || !bundle.allowed(f, w[i])) return false;
        if (i + 1 < w.size() && !bundle.edge(f, w[i], w[i + 1])) return false;
        f = bundle.base().theta(f);
    }
    return true;
}

/// All admissible words of fiber w0 on `span`, in lexicographic order.
inline WordList admissible_words(const SymbolicBundle& bundle, Fiber w0, Span span) {
    require(span.begin >= 0 && span.begin < span.end, "admissible_words: empty or negative span");
    const auto& base = bundle.base();
    const std::size_t len = static_cast<std::size_t>(span.length());
    std::vector<Fiber> fiber_at(len);
    for (std::size_t i = 0; i < len; ++i) fiber_at[i] = base.theta_pow(w0, span.begin + static_cast<long>(i));

    WordList out;
    Word w(len, 0);
    const std::size_t d = bundle.alphabet_size();
    // Depth-first enumeration in lexicographic order.
    std::vector<std::size_t> next(len, 0);
    std::size_t depth = 0;
    while (true) {
        if (next[depth] >= d) {
            if (depth == 0) break;
            --depth;
            continue;
        }
        const auto a = static_cast<Symbol>(next[depth]++);
        const bool ok = bundle.allowed(fiber_at[depth], a) &&
                        (depth == 0 || bundle.edge(fiber_at[depth - 1], w[depth - 1], a));
        if (!ok) continue;
        w[depth] = a;
        if (depth + 1 == len) {
            out.push_back(w);
        } else {
            ++depth;
            next[depth] = 0;
        }
    }
    return out;
}

__extension__ typedef unsigned __int128 uint128;

/// Number of admissible words; exact while it fits 128 bits, log-domain beyond.
struct WordCount {
    bool exact = true;
    uint128 value = 0;       ///< valid when exact
    double log_value = 0.0;  ///< natural log of the count, always set

    double as_double() const { return exact ? static_cast<double>(value) : std::exp(log_value); }
};

inline std::string to_string(uint128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v) {
        s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return {s.rbegin(), s.rend()};
}

/// Count of admissible words of fiber w0 on [0, n): the entry sum of the
/// product A_w0 A_{theta w0} ... A_{theta^{n-2} w0}.
inline WordCount word_count(const SymbolicBundle& bundle, Fiber w0, int n) {
    require(n >= 1, "word_count: n must be >= 1");
    const auto& base = bundle.base();
    const std::size_t d = bundle.alphabet_size();

    std::vector<uint128> v(d, 0);
    for (std::size_t a = 0; a < d; ++a) v[a] = bundle.allowed(w0, static_cast<Symbol>(a)) ? 1 : 0;
    bool overflow = false;
    Fiber f = w0;
    for (int step = 0; step + 1 < n && !overflow; ++step) {
        std::vector<uint128> next(d, 0);
        for (std::size_t a = 0; a < d && !overflow; ++a) {
            if (!v[a]) continue;
            for (std::size_t b = 0; b < d; ++b)
                if (bundle.edge(f, static_cast<Symbol>(a), static_cast<Symbol>(b)) &&
                    __builtin_add_overflow(next[b], v[a], &next[b])) {
                    overflow = true;
                    break;
                }
        }
        v = std::move(next);
        f = base.theta(f);
    }
    WordCount out;
    if (!overflow) {
        uint128 total = 0;
        for (auto x : v)
            if (__builtin_add_overflow(total, x, &total)) overflow = true;
        if (!overflow) {
            out.value = total;
            out.log_value = std::log(static_cast<double>(total));
            return out;
        }
    }
    // Log-domain fallback: renormalized transfer iteration.
    out.exact = false;
    std::vector<double> u(d);
    for (std::size_t a = 0; a < d; ++a) u[a] = bundle.allowed(w0, static_cast<Symbol>(a)) ? 1.0 : 0.0;
    double log_scale = 0.0;
    f = w0;
    for (int step = 0; step + 1 < n; ++step) {
        std::vector<double> next(d, 0.0);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                if (bundle.edge(f, static_cast<Symbol>(a), static_cast<Symbol>(b))) next[b] += u[a];
        const double s = std::accumulate(next.begin(), next.end(), 0.0);
        for (auto& x : next) x /= s;
        log_scale += std::log(s);
        u = std::move(next);
        f = base.theta(f);
    }
    out.log_value = log_scale + std::log(std::accumulate(u.begin(), u.end(), 0.0));
    return out;
}

struct CycleRate {
    std::vector<Fiber> cycle;
    double mass = 0.0;  ///< total P-mass of the cycle
    double rate = 0.0;  ///< nats per step
    SpectralResult spectral;
};

struct GrowthReport {
    std::vector<CycleRate> cycles;
    double integrated = 0.0;
    bool converged = true;
};

/// Exact exponential growth rate of word counts per theta-cycle:
/// (1/L) ln rho(A_w A_{theta w} ... A_{theta^{L-1} w}).
inline GrowthReport cycle_growth_rate(const SymbolicBundle& bundle, SpectralOptions opts = {}) {
    GrowthReport report;
    for (const auto& cyc : bundle.base().cycles()) {
        Matrix<double> product = bundle.transfer(cyc.front());
        for (std::size_t j = 1; j < cyc.size(); ++j) product = product * bundle.transfer(cyc[j]);
        CycleRate cr;
        cr.cycle = cyc;
        for (Fiber w : cyc) cr.mass += bundle.base().weight(w);
        cr.spectral = spectral_radius(product, opts);
        cr.rate = std::log(cr.spectral.radius) / static_cast<double>(cyc.size());
        report.converged = report.converged && cr.spectral.converged;
        report.integrated += cr.mass * cr.rate;
        report.cycles.push_back(std::move(cr));
    }
    return report;
}

}  // namespace rdelab
