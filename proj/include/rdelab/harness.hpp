#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rdelab/instance.hpp"
#include "rdelab/optimize.hpp"
#include "rdelab/witness.hpp"

namespace rdelab {

inline constexpr int report_schema_version = 1;

struct GenParams {
    int omega_min = 1, omega_max = 4;
    int alphabet_min = 1, alphabet_max = 3;
    int window_max = 2;
    int cover_elements_max = 3;
    double density = 0.6;          ///< adjacency entry probability
    double word_density = 0.4;     ///< cover membership probability before repair
    int rejection_budget = 1000;
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

namespace detail {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Random element membership for `words`, then every word left out is added to a
/// random element.
inline std::vector<WordList> random_cover_sets(Rng& rng, const WordList& words, int elements, double density) {
    std::vector<WordList> sets(static_cast<std::size_t>(elements));
    for (const auto& w : words) {
        bool placed = false;
        for (auto& s : sets)
            if (uniform01(rng) < density) {
                s.push_back(w);
                placed = true;
            }
        if (!placed) sets[static_cast<std::size_t>(uniform_int(rng, 0, elements - 1))].push_back(w);
    }
    for (auto& s : sets) canonicalize(s);
    return sets;
}

inline WordList union_of(const std::vector<WordList>& lists) {
    WordList all;
    for (const auto& l : lists) all.insert(all.end(), l.begin(), l.end());
    canonicalize(all);
    return all;
}

inline std::vector<Matrix<double>> random_transitions(Rng& rng, const SymbolicBundle& bundle) {
    const std::size_t d = bundle.alphabet_size();
    std::vector<Matrix<double>> q(bundle.omega_count(), Matrix<double>(d, d));
    std::exponential_distribution<double> draw(1.0);
    for (Fiber w = 0; w < bundle.omega_count(); ++w)
        for (std::size_t a = 0; a < d; ++a) {
            std::vector<std::size_t> succ;
            for (std::size_t b = 0; b < d; ++b)
                if (bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b))) succ.push_back(b);
            std::vector<double> x(succ.size(), 0.0);
            double total = 0.0;
            for (auto& v : x) {
                v = uniform01(rng) < 0.25 ? 0.0 : draw(rng);
                total += v;
            }
            if (total == 0.0) {
                x[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(x.size()) - 1))] = 1.0;
                total = 1.0;
            }
            for (std::size_t k = 0; k < succ.size(); ++k) q[w](a, succ[k]) = x[k] / total;
        }
    return q;
}

/// Random fibered word measure at `horizon`: random weights on a random nonempty
/// subset of each fiber's admissible words.
inline WordMeasure random_word_measure(Rng& rng, const SymbolicBundle& bundle, int horizon) {
    WordMeasure nu;
    nu.horizon = horizon;
    nu.fibers.resize(bundle.omega_count());
    std::exponential_distribution<double> draw(1.0);
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        const auto words = admissible_words(bundle, w, {0, horizon});
        std::vector<double> x(words.size(), 0.0);
        double total = 0.0;
        for (auto& v : x) {
            v = uniform01(rng) < 0.5 ? draw(rng) : 0.0;
            total += v;
        }
        if (total == 0.0) {
            x[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(x.size()) - 1))] = 1.0;
            total = 1.0;
        }
        for (std::size_t i = 0; i < words.size(); ++i)
            if (x[i] > 0.0) nu.fibers[w][words[i]] = x[i] / total;
    }
    return nu;
}

}  // namespace detail

/// Deterministic random instance: covers zero_cyl, part (product partition), prod
/// (product cover), fiber (fiber-dependent cover); measures m0, m1.
inline Instance gen_instance(std::uint64_t seed, const GenParams& params = {}) {
    require(1 <= params.omega_min && params.omega_min <= params.omega_max && params.omega_max <= 6,
            "gen_instance: fiber count outside 1..6");
    require(1 <= params.alphabet_min && params.alphabet_min <= params.alphabet_max && params.alphabet_max <= 4,
            "gen_instance: alphabet size outside 1..4");
    require(1 <= params.window_max, "gen_instance: window_max must be >= 1");
    detail::Rng rng(seed);
    const int omega = detail::uniform_int(rng, params.omega_min, params.omega_max);
    const int d = detail::uniform_int(rng, params.alphabet_min, params.alphabet_max);

    std::vector<std::size_t> theta(static_cast<std::size_t>(omega));
    std::iota(theta.begin(), theta.end(), std::size_t{0});
    std::shuffle(theta.begin(), theta.end(), rng);
    std::vector<std::string> labels, alphabet;
    for (int i = 0; i < omega; ++i) labels.push_back("w" + std::to_string(i));
    for (int i = 0; i < d; ++i) alphabet.push_back(std::string(1, static_cast<char>('a' + i)));

    // P uniform within each theta-cycle.
    std::vector<double> weights(static_cast<std::size_t>(omega), 0.0);
    {
        std::vector<bool> seen(theta.size(), false);
        std::vector<std::vector<std::size_t>> cycles;
        for (std::size_t s = 0; s < theta.size(); ++s) {
            if (seen[s]) continue;
            cycles.emplace_back();
            for (std::size_t w = s; !seen[w]; w = theta[w]) {
                seen[w] = true;
                cycles.back().push_back(w);
            }
        }
        std::vector<double> mass;
        double total = 0.0;
        for (std::size_t c = 0; c < cycles.size(); ++c) {
            mass.push_back(0.5 + detail::uniform01(rng));
            total += mass.back();
        }
        for (std::size_t c = 0; c < cycles.size(); ++c)
            for (auto w : cycles[c]) weights[w] = mass[c] / total / static_cast<double>(cycles[c].size());
    }
    ProbBase base(labels, weights, theta);

    std::vector<Matrix<std::uint8_t>> adjacency;
    for (int w = 0; w < omega; ++w) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= params.rejection_budget)
                fail(ErrorKind::guard, "gen_instance: rejection budget exceeded while sampling adjacency");
            Matrix<std::uint8_t> a(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) a(r, c) = detail::uniform01(rng) < params.density ? 1 : 0;
            bool ok = true;
            for (int r = 0; r < d && ok; ++r) {
                bool row = false, col = false;
                for (int c = 0; c < d; ++c) {
                    row = row || a(r, c);
                    col = col || a(c, r);
                }
                ok = row && col;
            }
            if (ok) {
                adjacency.push_back(std::move(a));
                break;
            }
        }
    }

    Instance inst;
    inst.bundle = SymbolicBundle(std::move(base), alphabet, std::move(adjacency));
    const auto& bundle = inst.bundle;
    inst.covers["zero_cyl"] = zero_cylinder_partition(bundle);

    auto window = [&] { return Span{0, detail::uniform_int(rng, 1, params.window_max)}; };
    {
        const Span span = window();
        const auto words = detail::union_of(detail::admissible_by_fiber(bundle, span));
        const int k = detail::uniform_int(rng, 1, params.cover_elements_max);
        std::vector<WordList> cells(static_cast<std::size_t>(k));
        for (const auto& w : words) cells[static_cast<std::size_t>(detail::uniform_int(rng, 0, k - 1))].push_back(w);
        inst.covers["part"] = make_product_cover(bundle, span, cells);
    }
    {
        const Span span = window();
        const auto words = detail::union_of(detail::admissible_by_fiber(bundle, span));
        const int k = detail::uniform_int(rng, 1, params.cover_elements_max);
        inst.covers["prod"] = make_product_cover(bundle, span, detail::random_cover_sets(rng, words, k, params.word_density));
    }
    {
        const Span span = window();
        const int k = detail::uniform_int(rng, 1, params.cover_elements_max);
        std::vector<std::vector<WordList>> sections(static_cast<std::size_t>(k), std::vector<WordList>(bundle.omega_count()));
        for (Fiber w = 0; w < bundle.omega_count(); ++w) {
            const auto sets = detail::random_cover_sets(rng, admissible_words(bundle, w, span), k, params.word_density);
            for (int e = 0; e < k; ++e) sections[static_cast<std::size_t>(e)][w] = sets[static_cast<std::size_t>(e)];
        }
        inst.covers["fiber"] = make_cover(bundle, span, std::move(sections));
    }
    inst.transitions["m0"] = detail::random_transitions(rng, bundle);
    inst.transitions["m1"] = detail::random_transitions(rng, bundle);
    return inst;
}

// ---------------------------------------------------------------------------
// Property suite

struct SuiteCaps {
    int omega = 4;
    int alphabet = 3;
    int window = 2;
    int nmax = 4;
    int horizon = 14;
};

struct SuiteConfig {
    std::uint64_t seed = 7;
    int instances = 200;
    std::map<std::string, int> cases = {{"separated.size", 100}, {"witness.bounds", 30}, {"power", 40}, {"mass_transfer", 1000}};
    SuiteCaps caps;
    double tolerance = 1e-9;
    std::vector<std::string> only;  ///< check-id prefixes; empty selects all
    bool inject_fault = false;      ///< perturb one Q entry of m0 without re-deriving its starts
    unsigned threads = 0;           ///< 0: RDE_LAB_THREADS, else hardware
    int budget = 2000;              ///< optimizer budget of the gap check
    double gap_slack = 0.05;
    std::optional<Instance> file;   ///< check this instance instead of generated ones
};

/// Parses "omega=4,alphabet=3,window=2,nmax=4,horizon=14" (any subset).
inline SuiteCaps parse_caps(const std::string& text, SuiteCaps caps = {}) {
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        require(eq != std::string::npos, "caps: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        int value = 0;
        try {
            value = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            fail(ErrorKind::precondition, "caps: '" + item + "' has no integer value");
        }
        if (key == "omega") caps.omega = value;
        else if (key == "alphabet") caps.alphabet = value;
        else if (key == "window") caps.window = value;
        else if (key == "nmax") caps.nmax = value;
        else if (key == "horizon") caps.horizon = value;
        else fail(ErrorKind::precondition, "caps: unknown key '" + key + "'");
    }
    require(1 <= caps.omega && caps.omega <= 6, "caps: omega must be in 1..6");
    require(1 <= caps.alphabet && caps.alphabet <= 4, "caps: alphabet must be in 1..4");
    require(1 <= caps.window && caps.window <= 3, "caps: window must be in 1..3");
    require(1 <= caps.nmax && caps.nmax <= 12, "caps: nmax must be in 1..12");
    require(2 <= caps.horizon && caps.horizon <= 14, "caps: horizon must be in 2..14");
    return caps;
}

enum class CheckKind { exact, soft };

struct CheckOutcome {
    std::string id;
    CheckKind kind = CheckKind::exact;
    bool passed = true;
    bool skipped = false;
    double margin = std::numeric_limits<double>::infinity();  ///< slack; negative means violated
    std::string detail;
    std::optional<std::uint64_t> instance_seed;
    std::optional<json> instance;
};

struct CheckSummary {
    CheckKind kind = CheckKind::exact;
    std::size_t passed = 0, failed = 0, skipped = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
};

struct SuiteReport {
    std::map<std::string, CheckSummary> checks;
    std::vector<CheckOutcome> failures;
    std::size_t exact_failures = 0;
    std::size_t soft_failures = 0;

    bool ok() const noexcept { return exact_failures == 0; }
    json to_json(const SuiteConfig& config) const;
};

inline const char* to_string(CheckKind k) { return k == CheckKind::exact ? "exact" : "soft"; }

namespace detail {

/// Collects outcomes of one check id on one input; margins accumulate as minima.
class Probe {
public:
    Probe(std::string id, CheckKind kind, double tol) : tol_(tol) {
        out_.id = std::move(id);
        out_.kind = kind;
    }

    /// lhs <= rhs within tolerance.
    void le(double lhs, double rhs, const std::string& what) {
        if (lhs == -std::numeric_limits<double>::infinity() || rhs == std::numeric_limits<double>::infinity()) return;
        margin(rhs - lhs, what);
    }
    void eq(double a, double b, const std::string& what) { margin(-std::abs(a - b), what); }
    void truth(bool ok, const std::string& what) {
        if (!ok) margin(-1.0, what);
    }

    void skip(const std::string& why) {
        out_.skipped = true;
        out_.detail = why;
    }
    CheckOutcome take() && {
        if (out_.skipped && !out_.passed) out_.skipped = false;
        return std::move(out_);
    }

private:
    void margin(double m, const std::string& what) {
        if (std::isnan(m)) m = -std::numeric_limits<double>::infinity();
        out_.margin = std::min(out_.margin, m);
        const bool ok = m >= -tol_;
        if (!ok && out_.passed) {
            out_.passed = false;
            out_.detail = what + " (margin " + std::to_string(m) + ")";
        }
    }
    double tol_;
    CheckOutcome out_;
};

inline bool selected(const std::vector<std::string>& only, const std::string& id) {
    if (only.empty()) return true;
    for (const auto& p : only)
        if (id.compare(0, p.size(), p) == 0) return true;
    return false;
}

/// Nonempty elements as a sorted multiset of section vectors.
inline std::vector<std::vector<WordList>> family(const PositionedCover& c) {
    std::vector<std::vector<WordList>> out;
    for (const auto& element : c.sections) {
        bool empty = true;
        for (const auto& s : element) empty = empty && s.empty();
        if (!empty) out.push_back(element);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::size_t brute_force_cover(std::size_t universe, const std::vector<Bitset>& sets) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::uint32_t mask = 1; mask < (1u << sets.size()); ++mask) {
        const auto k = static_cast<std::size_t>(std::popcount(mask));
        if (k >= best) continue;
        Bitset covered(universe);
        for (std::size_t i = 0; i < sets.size(); ++i)
            if (mask & (1u << i)) covered |= sets[i];
        if (covered.count() == universe) best = k;
    }
    return best;
}

struct Context {
    const SuiteConfig& config;
    const Instance& inst;
    std::size_t index;
    std::optional<std::uint64_t> seed;
    std::vector<CheckOutcome>& out;

    bool wants(const std::string& id, const char* family_key = nullptr) const {
        if (!selected(config.only, id)) return false;
        if (family_key) {
            const auto it = config.cases.find(family_key);
            if (it != config.cases.end() && index >= static_cast<std::size_t>(it->second)) return false;
        }
        return true;
    }

    void run(const std::string& id, CheckKind kind, const std::function<void(Probe&)>& body,
             const char* family_key = nullptr) {
        if (!wants(id, family_key)) return;
        Probe p(id, kind, config.tolerance);
        try {
            body(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::guard) p.skip(e.what());
            else p.truth(false, std::string("error: ") + e.what());
        }
        auto o = std::move(p).take();
        if (!o.passed) {
            o.instance_seed = seed;
            o.instance = instance_to_json(inst);
        }
        out.push_back(std::move(o));
    }
};

inline MarkovMeasure mutated(const SymbolicBundle& bundle, MarkovMeasure mu) {
    for (Fiber w = 0; w < bundle.omega_count(); ++w)
        for (std::size_t a = 0; a < bundle.alphabet_size(); ++a) {
            std::vector<std::size_t> pos;
            for (std::size_t b = 0; b < bundle.alphabet_size(); ++b)
                if (bundle.edge(w, static_cast<Symbol>(a), static_cast<Symbol>(b))) pos.push_back(b);
            if (pos.size() < 2 || mu.starts[w][a] <= 0.0) continue;
            auto& q = mu.transitions[w];
            const double move = std::min(0.01, q(a, pos[0]) > 0.0 ? q(a, pos[0]) : 0.01);
            if (q(a, pos[0]) >= move) {
                q(a, pos[0]) -= move;
                q(a, pos[1]) += move;
            } else {
                q(a, pos[1]) -= move;
                q(a, pos[0]) += move;
            }
            return mu;
        }
    return mu;
}

inline void instance_checks(Context& ctx) {
    const auto& inst = ctx.inst;
    const auto& bundle = inst.bundle;
    const auto& base = bundle.base();
    const auto& caps = ctx.config.caps;
    const double tol = ctx.config.tolerance;
    const std::size_t F = bundle.omega_count();
    Rng rng(derive_seed(ctx.seed.value_or(0), 0xc0ffee));

    std::vector<std::string> cover_names;
    for (const auto& [name, c] : inst.covers) cover_names.push_back(name);
    std::vector<std::string> measure_names;
    for (const auto& [name, q] : inst.transitions) measure_names.push_back(name);
    auto cover_or = [&](const char* name, const char* fallback) -> const PositionedCover& {
        return inst.covers.count(name) ? inst.covers.at(name) : inst.cover(fallback);
    };
    const bool generated = inst.covers.count("zero_cyl") && inst.covers.count("part") && inst.covers.count("prod") &&
                           inst.covers.count("fiber");
    const PositionedCover zero = zero_cylinder_partition(bundle);
    const int nmax = std::min(caps.nmax, 4);

    ctx.run("base.validate", CheckKind::exact, [&](Probe& p) {
        const auto d = validate(bundle);
        p.truth(d.ok(), d.ok() ? "" : d.issues.front());
    });
    ctx.run("base.word_count", CheckKind::exact, [&](Probe& p) {
        for (Fiber w = 0; w < F; ++w)
            for (int n = 1; n <= std::min(caps.horizon, 8); ++n)
                p.eq(static_cast<double>(admissible_words(bundle, w, {0, n}).size()), word_count(bundle, w, n).as_double(),
                     "admissible_words vs word_count at n=" + std::to_string(n));
    });
    ctx.run("base.submultiplicative", CheckKind::exact, [&](Probe& p) {
        for (Fiber w = 0; w < F; ++w)
            for (int n = 1; n <= 4; ++n)
                for (int m = 1; m <= 4; ++m)
                    p.le(word_count(bundle, w, n + m).as_double(),
                         word_count(bundle, w, n).as_double() * word_count(bundle, base.theta_pow(w, n), m).as_double(),
                         "word_count(n+m) <= word_count(n) word_count(m)");
    });
    ctx.run("base.relabel", CheckKind::exact, [&](Probe& p) {
        const std::size_t d = bundle.alphabet_size();
        std::vector<std::size_t> theta(F);
        std::vector<double> weights(F);
        std::vector<std::string> labels(F);
        std::vector<Matrix<std::uint8_t>> adjacency(F);
        auto flip = [&](Fiber w) { return F - 1 - w; };
        for (Fiber w = 0; w < F; ++w) {
            theta[flip(w)] = flip(base.theta(w));
            weights[flip(w)] = base.weight(w);
            labels[flip(w)] = base.label(w);
            Matrix<std::uint8_t> a(d, d);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) a(d - 1 - r, d - 1 - c) = bundle.adjacency(w)(r, c);
            adjacency[flip(w)] = std::move(a);
        }
        const SymbolicBundle other(ProbBase(labels, weights, theta), bundle.alphabet(), adjacency);
        p.eq(cycle_growth_rate(bundle).integrated, cycle_growth_rate(other).integrated, "growth rate under relabeling");
    });

    if (generated) {
        const auto& prod = inst.cover("prod");
        const auto& fiber = inst.cover("fiber");
        const auto& part = inst.cover("part");
        ctx.run("cover.pullback_join", CheckKind::exact, [&](Probe& p) {
            for (int i = 1; i <= 2; ++i)
                p.truth(pullback(bundle, join(bundle, prod, fiber), i) ==
                            join(bundle, pullback(bundle, prod, i), pullback(bundle, fiber, i)),
                        "pullback of a join at i=" + std::to_string(i));
        });
        ctx.run("cover.range_join_split", CheckKind::exact, [&](Probe& p) {
            for (const auto* u : {&prod, &fiber, &part})
                for (int n = 1; n <= 2; ++n)
                    for (int m = 1; m <= 2; ++m) {
                        const auto whole = range_join(bundle, *u, 0, n + m - 1);
                        const auto split = join(bundle, range_join(bundle, *u, 0, n - 1),
                                                pullback(bundle, range_join(bundle, *u, 0, m - 1), n));
                        p.truth(family(whole) == family(split), "range_join split n=" + std::to_string(n) +
                                                                    " m=" + std::to_string(m));
                    }
        });
        ctx.run("cover.monotone_join", CheckKind::exact, [&](Probe& p) {
            const auto v = join(bundle, prod, part);
            p.truth(is_finer(bundle, v, prod), "U join W finer than U");
            p.truth(is_finer(bundle, join(bundle, v, fiber), join(bundle, prod, fiber)), "monotonicity of join");
        });
        ctx.run("cover.product_partitions", CheckKind::exact, [&](Probe& p) {
            auto it = product_partitions_finer(bundle, prod);
            if (it.count() > 5000) {
                p.skip("enumeration larger than 5000");
                return;
            }
            std::size_t seen = 0;
            std::vector<PositionedCover> all;
            while (auto r = it.next()) {
                ++seen;
                p.truth(is_partition(*r) && check_cover(bundle, *r).ok(), "yielded family is a partition");
                p.truth(is_finer(bundle, *r, prod), "yielded partition finer than U");
                all.push_back(*r);
            }
            p.eq(static_cast<double>(seen), static_cast<double>(it.count()), "enumeration count");
            std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.sections < b.sections; });
            p.truth(std::adjacent_find(all.begin(), all.end()) == all.end(), "enumeration has no duplicates");
        });
        ctx.run("covercomb.exact", CheckKind::exact, [&](Probe& p) {
            for (const auto* u : {&prod, &fiber})
                for (int n = 1; n <= nmax; ++n) {
                    const auto c = range_join(bundle, *u, 0, n - 1);
                    if (c.size() > 12) break;
                    for (Fiber w = 0; w < F; ++w) {
                        const auto universe = admissible_words(bundle, w, c.window);
                        if (universe.size() > 20) continue;
                        std::vector<Bitset> sets;
                        for (const auto& e : c.sections) {
                            Bitset b(universe.size());
                            for (std::size_t i = 0; i < universe.size(); ++i)
                                if (contains_word(e[w], universe[i])) b.set(i);
                            sets.push_back(b);
                        }
                        p.eq(static_cast<double>(min_subcover_count(bundle, w, c).size),
                             static_cast<double>(brute_force_cover(universe.size(), sets)), "exact set cover vs brute force");
                    }
                }
        });
        ctx.run("covercomb.monotone", CheckKind::exact, [&](Probe& p) {
            const auto v = join(bundle, prod, fiber);
            for (int n = 1; n <= std::min(nmax, 3); ++n)
                for (Fiber w = 0; w < F; ++w)
                    p.le(static_cast<double>(cover_count(bundle, w, prod, n)), static_cast<double>(cover_count(bundle, w, v, n)),
                         "N(U) <= N(V) for V finer than U");
        });
        ctx.run("covercomb.submultiplicative", CheckKind::exact, [&](Probe& p) {
            for (const auto* u : {&prod, &fiber})
                for (int n = 1; n < nmax; ++n)
                    for (int m = 1; n + m <= nmax; ++m)
                        for (Fiber w = 0; w < F; ++w)
                            p.le(static_cast<double>(cover_count(bundle, w, *u, n + m)),
                                 static_cast<double>(cover_count(bundle, w, *u, n) *
                                                     cover_count(bundle, base.theta_pow(w, n), *u, m)),
                                 "N(n+m) <= N(n) N(m)");
        });
    }

    // Measures.
    for (const auto& mname : measure_names) {
        const auto mu = inst.measure(mname);
        ctx.run("measures.invariance", CheckKind::exact, [&](Probe& p) {
            const auto m = ctx.config.inject_fault && mname == measure_names.front() ? mutated(bundle, mu) : mu;
            p.le(invariance_residual(bundle, m), invariance_tolerance, "invariance residual of " + mname);
            for (int h = 2; h <= 4; ++h)
                p.le(max_weight_difference(pushforward(bundle, markov_to_word(bundle, m, h)), markov_to_word(bundle, m, h - 1)),
                     invariance_tolerance, "pushforward identity at horizon " + std::to_string(h));
        });
        ctx.run("variational.upper", CheckKind::exact, [&](Probe& p) {
            const double htop = cycle_growth_rate(bundle).integrated;
            p.le(markov_entropy_rate(bundle, mu), htop + tol, "measure entropy exceeds topological entropy");
            const auto r = h_partition_rate(bundle, mu, zero, 3);
            p.le(*r.exact_rate, r.certified_upper + tol, "exact rate above certified upper bound");
        });
    }
    ctx.run("entropy.htop_partition", CheckKind::exact, [&](Probe& p) {
        const auto growth = cycle_growth_rate(bundle);
        const auto r = htop_estimate(bundle, zero, std::min(caps.nmax, 6));
        p.eq(*r.exact_rate, growth.integrated, "block-recoded rate vs transfer-matrix rate");
        p.le(*r.exact_rate, r.certified_upper + tol, "exact rate above certified upper bound");
        for (std::size_t i = 1; i < r.certified.size(); ++i) p.le(r.certified[i], r.certified[i - 1], "certified bound increases");
        if (inst.covers.count("part")) {
            const auto rp = htop_estimate(bundle, inst.cover("part"), std::min(caps.nmax, 5));
            p.le(*rp.exact_rate, rp.certified_upper + tol, "partition exact rate above certified upper bound");
            p.le(*rp.exact_rate, growth.integrated + tol, "partition rate above h_top");
        }
    });

    if (measure_names.empty()) return;
    const auto mu = inst.measure(measure_names.front());
    const bool invariant = invariance_residual(bundle, mu) <= invariance_tolerance;

    std::vector<const PositionedCover*> covers;
    for (const auto& name : cover_names) covers.push_back(&inst.covers.at(name));
    std::vector<const PositionedCover*> product_covers;
    for (const auto* c : covers)
        if (c->product_form) product_covers.push_back(c);

    EntropyLimits limits;
    limits.enum_max = 20000;
    auto general = [&](const PositionedCover& c) {
        const auto r = cover_cond_entropy(bundle, mu, c, CoverMode::general, limits);
        if (!r.exact) fail(ErrorKind::guard, "general-mode search budget exhausted");
        return r.value;
    };
    // Best value found; an upper bound on the minimum even when the search stops early.
    auto general_upper = [&](const PositionedCover& c) {
        return cover_cond_entropy(bundle, mu, c, CoverMode::general, limits).value;
    };
    auto product = [&](const PositionedCover& c) {
        const auto r = cover_cond_entropy(bundle, mu, c, CoverMode::product, limits);
        if (!r.complete) fail(ErrorKind::guard, "product enumeration incomplete");
        return r.value;
    };

    ctx.run("condent.bounds", CheckKind::exact, [&](Probe& p) {
        for (const auto* c : covers) {
            const double bound = std::log(static_cast<double>(global_min_subcover(bundle, *c).size));
            for (int n = 1; n <= nmax; ++n) {
                const auto joined = range_join(bundle, *c, 0, n - 1);
                const auto r = cover_cond_entropy(bundle, mu, joined, CoverMode::general, limits);
                const double b = std::log(static_cast<double>(global_min_subcover(bundle, joined).size));
                p.le(0.0, r.lower, "H(U|F) >= 0");
                p.le(r.value, b, "H(U|F) <= ln N(U)");
            }
            if (c->product_form) {
                const double h = product(*c);
                p.le(0.0, h, "product H(U|F) >= 0");
                p.le(h, bound, "product H(U|F) <= ln N(U)");
            }
        }
    });
    ctx.run("condent.monotone", CheckKind::exact, [&](Probe& p) {
        for (const auto* u : covers)
            for (const auto* w : covers) {
                if (u == w) continue;
                const auto finer = join(bundle, *u, *w);
                p.le(general(*u), general(finer), "general: finer cover has smaller entropy");
                if (u->product_form && w->product_form) p.le(product(*u), product(finer), "product: finer cover has smaller entropy");
            }
    });
    ctx.run("condent.subadditive", CheckKind::exact, [&](Probe& p) {
        for (const auto* u : covers)
            for (const auto* v : covers) {
                if (u >= v) continue;
                p.le(general(join(bundle, *u, *v)), general(*u) + general(*v), "general: join subadditivity");
                if (u->product_form && v->product_form)
                    p.le(product(join(bundle, *u, *v)), product(*u) + product(*v), "product: join subadditivity");
            }
    });
    ctx.run("condent.shift", CheckKind::exact, [&](Probe& p) {
        for (const auto* u : covers) {
            const auto nu = random_word_measure(rng, bundle, u->window.end + 1);
            const auto a = cover_cond_entropy(bundle, nu, pullback(bundle, *u, 1), CoverMode::general, limits);
            const auto b = cover_cond_entropy(bundle, pushforward(bundle, nu), *u, CoverMode::general, limits);
            if (!a.exact || !b.exact) fail(ErrorKind::guard, "general-mode search budget exhausted");
            p.eq(a.value, b.value, "H_nu(Theta^-1 U) vs H_{Theta nu}(U)");
            if (invariant) {
                const double c = general(pullback(bundle, *u, 1));
                p.eq(c, general(*u), "invariant measure: H(Theta^-1 U) = H(U)");
            }
        }
    });
    if (invariant) {
        ctx.run("condent.below_htop", CheckKind::exact, [&](Probe& p) {
            for (const auto* c : covers)
                for (int n = 1; n <= nmax; ++n) {
                    const auto joined = range_join(bundle, *c, 0, n - 1);
                    p.le(general_upper(joined), cover_complexity(bundle, *c, n), "H_mu(U_0^{n-1}|F) <= H(T,U,n) at n=" + std::to_string(n));
                }
        });
    }
    ctx.run("condent.argmin_cells", CheckKind::exact, [&](Probe& p) {
        for (const auto* c : covers) {
            const auto r = cover_cond_entropy(bundle, mu, *c, CoverMode::general, limits);
            std::size_t sup_n = 0;
            for (Fiber w = 0; w < F; ++w) sup_n = std::max(sup_n, min_subcover_count(bundle, w, *c).size);
            const auto nu = markov_to_word(bundle, mu, c->window.end);
            for (Fiber w = 0; w < F; ++w) {
                p.le(r.per_fiber[w], std::log(static_cast<double>(sup_n)), "fiber entropy above ln sup N");
                // First-fit partition over a minimal subcover has at most N cells of positive mass.
                const auto chosen = min_subcover_count(bundle, w, *c).chosen;
                std::vector<double> cell(chosen.size(), 0.0);
                for (const auto& [word, m] : window_marginal(nu, w, c->window))
                    for (std::size_t k = 0; k < chosen.size(); ++k)
                        if (contains_word(c->sections[chosen[k]][w], word)) {
                            cell[k] += m;
                            break;
                        }
                const auto positive = static_cast<std::size_t>(std::count_if(cell.begin(), cell.end(), [](double x) { return x > 0.0; }));
                p.le(static_cast<double>(positive), static_cast<double>(sup_n), "positive cells above sup N");
                p.le(r.per_fiber[w], shannon(cell), "general minimum above first-fit partition entropy");
            }
        }
    });
    ctx.run("entropy.modes", CheckKind::exact, [&](Probe& p) {
        for (const auto* c : product_covers) {
            p.le(general(*c), product(*c), "general above product");
            if (is_partition(*c)) {
                const double h = cond_entropy_partition(bundle, mu, *c);
                p.eq(general(*c), h, "partition: general vs direct");
                p.eq(product(*c), h, "partition: product vs direct");
            }
        }
    });
    ctx.run("mixing.concavity", CheckKind::exact, [&](Probe& p) {
        const int h = uniform_int(rng, 1, std::min(6, caps.horizon));
        auto r = range_join(bundle, cover_or("part", "zero_cyl"), 0, 0);
        if (r.window.end > h) r = zero;
        const auto rj = range_join(bundle, r, 0, h - r.window.end);
        const double a = uniform01(rng);
        const auto nu = random_word_measure(rng, bundle, h);
        const auto eta = random_word_measure(rng, bundle, h);
        const double hm = cond_entropy_partition(bundle, mix({nu, eta}, {a, 1.0 - a}), rj);
        const double defect = hm - a * cond_entropy_partition(bundle, nu, rj) - (1.0 - a) * cond_entropy_partition(bundle, eta, rj);
        p.le(0.0, defect, "concavity");
        p.le(defect, entropy_term(a) + entropy_term(1.0 - a), "affinity bound");
    });

    if (!generated) return;
    const auto& prod = inst.cover("prod");
    ctx.run("separated.size", CheckKind::exact, [&](Probe& p) {
        const int n = uniform_int(rng, 1, 2);
        const int k = uniform_int(rng, 1, 3);
        std::vector<PositionedPartition> parts;
        auto it = product_partitions_finer(bundle, prod);
        while (parts.size() < static_cast<std::size_t>(k))
            if (auto r = it.next()) parts.push_back(std::move(*r));
            else break;
        for (Fiber w = 0; w < F; ++w) {
            const auto sep = maximal_multi_separated(bundle, w, parts, prod, n);
            p.le(static_cast<double>(sep.bound), static_cast<double>(sep.words.size()), "|B_n| >= floor(N/K)");
            std::vector<std::map<Word, std::size_t>> atom(parts.size());
            std::vector<PositionedCover> joined;
            for (std::size_t l = 0; l < parts.size(); ++l) {
                joined.push_back(range_join(bundle, parts[l], 0, n - 1));
                for (std::size_t e = 0; e < joined[l].size(); ++e)
                    for (const auto& word : joined[l].sections[e][w]) atom[l][word] = e;
            }
            auto atom_of = [&](std::size_t l, const Word& word) {
                return atom[l].at(restrict_word(word, sep.span, joined[l].window));
            };
            for (std::size_t l = 0; l < parts.size(); ++l) {
                std::map<std::size_t, int> hits;
                for (const auto& word : sep.words) ++hits[atom_of(l, word)];
                for (const auto& [e, count] : hits) p.le(static_cast<double>(count), 1.0, "two chosen words in one atom");
            }
            for (const auto& word : admissible_words(bundle, w, sep.span)) {
                if (std::find(sep.words.begin(), sep.words.end(), word) != sep.words.end()) continue;
                bool blocked = false;
                for (std::size_t l = 0; l < parts.size() && !blocked; ++l)
                    for (const auto& chosen : sep.words)
                        if (atom_of(l, chosen) == atom_of(l, word)) {
                            blocked = true;
                            break;
                        }
                p.truth(blocked, "separated set is extendable");
            }
        }
    }, "separated.size");
    ctx.run("witness.bounds", CheckKind::exact, [&](Probe& p) {
        for (int n = 1; n <= 2; ++n) {
            WitnessLimits wl;
            wl.horizon_max = caps.horizon;
            const auto wt = misiurewicz_witness(bundle, prod, n, std::nullopt, wl);
            for (const auto& b : wt.fiber_bounds) {
                p.le(b.middle, b.lhs, "fiber lower bound (first step)");
                p.le(b.rhs, b.middle, "fiber lower bound (second step)");
                p.eq(b.lhs, b.lhs_pushed, "pushed entropy");
            }
            for (const auto& b : wt.average_bounds) {
                p.le(b.middle, b.lhs, "mixture above average");
                p.le(b.rhs, b.middle, "average lower bound");
            }
        }
    }, "witness.bounds");
    if (invariant) {
        ctx.run("power.identity", CheckKind::exact, [&](Probe& p) {
            const auto& u = inst.cover("fiber");
            for (int M = 2; M <= 3; ++M) {
                const auto ps = power_system(bundle, u, M, 64);
                const auto pm = power_measure(bundle, mu, ps);
                p.le(invariance_residual(ps.bundle, pm), invariance_tolerance, "power measure invariance");
                for (int k = 1; k * M <= 4; ++k) {
                    const auto rl = cover_cond_entropy(ps.bundle, pm, range_join(ps.bundle, ps.cover, 0, k - 1),
                                                       CoverMode::general, limits);
                    if (!rl.exact) fail(ErrorKind::guard, "general-mode search budget exhausted");
                    const double lhs = rl.value;
                    const double rhs = general(range_join(bundle, u, 0, k * M - 1));
                    p.eq(lhs / (k * M), rhs / (k * M), "power system identity M=" + std::to_string(M) + " k=" + std::to_string(k));
                }
            }
        }, "power");
        ctx.run("power.minus_below_plus", CheckKind::exact, [&](Probe& p) {
            const int n = std::min(nmax, 3);
            const auto hm = h_minus_estimate(bundle, mu, prod, n, CoverMode::general, limits);
            const auto hp = h_plus_estimate(bundle, mu, prod, n, limits);
            if (!hp.complete) fail(ErrorKind::guard, "h_plus enumeration incomplete");
            p.le(hm.certified_upper, hp.value, "h_minus above h_plus");
        }, "power");
        ctx.run("power.plus_trend", CheckKind::soft, [&](Probe& p) {
            EntropyLimits small = limits;
            small.enum_max = 2000;
            const auto h1 = h_plus_estimate(bundle, mu, prod, 2, small);
            const auto ps = power_system(bundle, prod, 2, 64);
            const auto h2 = h_plus_estimate(ps.bundle, power_measure(bundle, mu, ps), ps.cover, 1, small);
            if (!h1.complete || !h2.complete) fail(ErrorKind::guard, "h_plus enumeration incomplete");
            p.le(h2.value / 2.0, h1.value + 0.05, "power-system h_plus trend");
        }, "power");
    }
}

inline void global_checks(const SuiteConfig& config, std::vector<CheckOutcome>& out) {
    const auto& only = config.only;
    auto run = [&](const std::string& id, CheckKind kind, const std::function<void(Probe&)>& body) {
        if (!selected(only, id)) return;
        Probe p(id, kind, config.tolerance);
        try {
            body(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::guard) p.skip(e.what());
            else p.truth(false, std::string("error: ") + e.what());
        }
        out.push_back(std::move(p).take());
    };
    run("mass_transfer", CheckKind::exact, [&](Probe& p) {
        Rng rng(derive_seed(config.seed, 0x1e77a7));
        const auto it = config.cases.find("mass_transfer");
        const int cases = it == config.cases.end() ? 1000 : it->second;
        for (int c = 0; c < cases; ++c) {
            const int k = uniform_int(rng, 2, 6);
            std::vector<double> q(static_cast<std::size_t>(k));
            double total = 0.0;
            for (auto& x : q) {
                x = 0.05 + uniform01(rng);
                total += x;
            }
            const double scale = (0.5 + 0.5 * uniform01(rng)) / total;
            for (auto& x : q) x *= scale;
            std::sort(q.begin(), q.end());
            std::vector<double> delta(static_cast<std::size_t>(k), 0.0);
            delta[0] = q[0] * (0.05 + 0.9 * uniform01(rng));
            std::vector<double> share(static_cast<std::size_t>(k - 1));
            double st = 0.0;
            for (auto& s : share) {
                s = uniform01(rng) + 1e-3;
                st += s;
            }
            for (int i = 1; i < k; ++i) delta[static_cast<std::size_t>(i)] = delta[0] * share[static_cast<std::size_t>(i - 1)] / st;
            double moved = 0.0;
            for (int i = 1; i < k; ++i) moved += delta[static_cast<std::size_t>(i)];
            delta[static_cast<std::size_t>(k - 1)] += delta[0] - moved;
            const auto r = lemma7_holds(q, delta);
            if (!r.hypotheses_ok()) {
                p.truth(false, "generated tuple violates hypotheses: " + r.violations.front());
                continue;
            }
            p.truth(r.holds, "mass transfer did not lower entropy");
            p.le(0.0, r.margin, "margin");
        }
        p.truth(!lemma7_holds({0.3, 0.5}, {0.0, 0.0}).hypotheses_ok(), "delta_1 = 0 accepted");
    });
    run("witness.gm2", CheckKind::exact, [&](Probe& p) {
        const auto g = gm2();
        const auto wt = misiurewicz_witness(g.bundle, g.cover("zero_cyl"), 2);
        p.truth(wt.all_hold(), "witness inequality failed on gm2");
    });
    run("variational.gap", CheckKind::soft, [&](Probe& p) {
        for (const auto& inst : {gm2(), full2()}) {
            MaximizeOptions opt;
            opt.budget = config.budget;
            opt.seed = 0;
            const auto r = maximize_partition_entropy(inst.bundle, inst.cover("zero_cyl"), opt);
            p.le(r.gap, config.gap_slack, "optimizer gap to h_top");
            p.le(r.max_seen, r.htop + config.tolerance, "sampled measure above h_top");
        }
    });
}

inline unsigned worker_count(unsigned requested) {
    if (requested == 0) {
        if (const char* env = std::getenv("RDE_LAB_THREADS")) {
            try {
                requested = static_cast<unsigned>(std::stoul(env));
            } catch (const std::exception&) {
                requested = 0;
            }
        }
    }
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

}  // namespace detail

/// Runs every selected check; instance checks run on a worker pool and are merged
/// by instance index, so the report does not depend on scheduling.
inline SuiteReport run_suite(const SuiteConfig& config) {
    GenParams params;
    params.omega_max = config.caps.omega;
    params.alphabet_max = config.caps.alphabet;
    params.window_max = config.caps.window;

    const std::size_t count = config.file ? 1 : static_cast<std::size_t>(std::max(0, config.instances));
    std::vector<std::vector<CheckOutcome>> per_instance(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            std::optional<std::uint64_t> seed;
            Instance inst;
            if (config.file) {
                inst = *config.file;
            } else {
                seed = derive_seed(config.seed, i);
                inst = gen_instance(*seed, params);
            }
            detail::Context ctx{config, inst, i, seed, per_instance[i]};
            try {
                detail::instance_checks(ctx);
            } catch (const Error& e) {
                CheckOutcome o;
                o.id = "suite.instance";
                o.passed = false;
                o.margin = -1.0;
                o.detail = e.what();
                o.instance_seed = seed;
                per_instance[i].push_back(std::move(o));
            }
        }
    };
    const unsigned threads = std::min<unsigned>(detail::worker_count(config.threads), static_cast<unsigned>(std::max<std::size_t>(count, 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<CheckOutcome> all;
    detail::global_checks(config, all);
    for (auto& v : per_instance)
        for (auto& o : v) all.push_back(std::move(o));

    SuiteReport report;
    for (auto& o : all) {
        auto& s = report.checks[o.id];
        s.kind = o.kind;
        if (o.skipped) {
            ++s.skipped;
            continue;
        }
        s.worst_margin = std::min(s.worst_margin, o.margin);
        if (o.passed) {
            ++s.passed;
            continue;
        }
        ++s.failed;
        if (o.kind == CheckKind::exact) ++report.exact_failures;
        else ++report.soft_failures;
        report.failures.push_back(std::move(o));
    }
    return report;
}

inline json SuiteReport::to_json(const SuiteConfig& config) const {
    const auto number = json_number;
    json j;
    j["schema_version"] = report_schema_version;
    j["config"] = {{"seed", config.seed},
                   {"instances", config.file ? 1 : config.instances},
                   {"cases", config.cases},
                   {"caps",
                    {{"omega", config.caps.omega},
                     {"alphabet", config.caps.alphabet},
                     {"window", config.caps.window},
                     {"nmax", config.caps.nmax},
                     {"horizon", config.caps.horizon}}},
                   {"tolerance", config.tolerance},
                   {"only", config.only},
                   {"inject_fault", config.inject_fault},
                   {"budget", config.budget},
                   {"gap_slack", config.gap_slack}};
    json checks = json::object();
    for (const auto& [id, s] : this->checks)
        checks[id] = {{"kind", to_string(s.kind)},
                      {"passed", s.passed},
                      {"failed", s.failed},
                      {"skipped", s.skipped},
                      {"worst_margin", number(s.worst_margin)}};
    j["checks"] = checks;
    json failures = json::array();
    for (const auto& f : this->failures) {
        json b = {{"check", f.id}, {"kind", to_string(f.kind)}, {"detail", f.detail}, {"margin", number(f.margin)}};
        if (f.instance_seed) b["instance_seed"] = *f.instance_seed;
        if (f.instance) b["instance"] = *f.instance;
        failures.push_back(b);
    }
    j["failures"] = failures;
    j["exact_failures"] = exact_failures;
    j["soft_failures"] = soft_failures;
    j["ok"] = ok();
    return j;
}

}  // namespace rdelab
