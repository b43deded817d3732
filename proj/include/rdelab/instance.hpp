#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "rdelab/cover.hpp"
#include "rdelab/measure.hpp"

namespace rdelab {

using json = nlohmann::json;

/// Doubles as JSON; infinities become the strings "inf" / "-inf".
inline json json_number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

/// A bundle with named covers and named transition families, as read from an
/// instance file. Measures are built on request so that a broken bundle can
/// still be loaded and diagnosed.
struct Instance {
    SymbolicBundle bundle;
    std::map<std::string, PositionedCover> covers;
    std::map<std::string, std::vector<Matrix<double>>> transitions;

    const PositionedCover& cover(const std::string& name) const {
        const auto it = covers.find(name);
        if (it == covers.end()) fail(ErrorKind::unknown_name, "unknown cover '" + name + "'");
        return it->second;
    }

    PositionedPartition partition(const std::string& name) const { return as_partition(bundle, cover(name)); }

    MarkovMeasure measure(const std::string& name) const {
        const auto it = transitions.find(name);
        if (it == transitions.end()) fail(ErrorKind::unknown_name, "unknown measure '" + name + "'");
        return make_markov(bundle, it->second);
    }
};

namespace detail {

inline void schema_check(bool ok, const std::string& where, const std::string& what) {
    if (!ok) fail(ErrorKind::schema, where + ": " + what);
}

inline void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    schema_check(j.is_object(), where, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        schema_check(known, where, "unknown field '" + key + "'");
    }
}

inline const json& field(const json& j, const std::string& where, const char* key) {
    schema_check(j.contains(key), where, std::string("missing field '") + key + "'");
    return j.at(key);
}

inline bool single_char_names(const SymbolicBundle& bundle) {
    for (const auto& a : bundle.alphabet())
        if (a.size() != 1) return false;
    return true;
}

inline Word parse_word(const SymbolicBundle& bundle, const json& j, const std::string& where) {
    Word w;
    auto symbol = [&](const std::string& name) {
        const auto& names = bundle.alphabet();
        const auto it = std::find(names.begin(), names.end(), name);
        schema_check(it != names.end(), where, "unknown symbol '" + name + "'");
        w.push_back(static_cast<Symbol>(it - names.begin()));
    };
    if (j.is_string()) {
        schema_check(single_char_names(bundle), where, "string words need single-character symbol names");
        for (char c : j.get<std::string>()) symbol(std::string(1, c));
    } else {
        schema_check(j.is_array(), where, "a word is a string or an array of symbol names");
        for (const auto& s : j) {
            schema_check(s.is_string(), where, "symbol names must be strings");
            symbol(s.get<std::string>());
        }
    }
    return w;
}

inline json word_to_json(const SymbolicBundle& bundle, const Word& w) {
    if (single_char_names(bundle)) return bundle.format(w);
    json a = json::array();
    for (Symbol s : w) a.push_back(bundle.alphabet()[s]);
    return a;
}

template <class T>
Matrix<T> parse_matrix(const json& j, std::size_t n, const std::string& where) {
    schema_check(j.is_array() && j.size() == n, where, "expected " + std::to_string(n) + " rows");
    Matrix<T> m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        schema_check(j[r].is_array() && j[r].size() == n, where, "row " + std::to_string(r) + " must have " +
                                                                     std::to_string(n) + " entries");
        for (std::size_t c = 0; c < n; ++c) {
            const auto& x = j[r][c];
            if constexpr (std::is_same_v<T, std::uint8_t>) {
                schema_check(x.is_number_integer() && (x.get<int>() == 0 || x.get<int>() == 1), where,
                             "adjacency entries must be 0 or 1");
                m(r, c) = static_cast<std::uint8_t>(x.get<int>());
            } else {
                schema_check(x.is_number(), where, "entries must be numbers");
                m(r, c) = x.get<T>();
            }
        }
    }
    return m;
}

template <class T>
json matrix_to_json(const Matrix<T>& m) {
    json a = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if constexpr (std::is_same_v<T, std::uint8_t>) row.push_back(static_cast<int>(m(r, c)));
            else row.push_back(m(r, c));
        }
        a.push_back(row);
    }
    return a;
}

/// Per-fiber objects keyed by fiber name; every fiber must appear exactly once.
template <class F>
void per_fiber(const json& j, const ProbBase& base, const std::string& where, F&& each) {
    schema_check(j.is_object(), where, "expected an object keyed by fiber name");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const auto& l : base.labels()) known = known || l == key;
        schema_check(known, where, "unknown fiber '" + key + "'");
    }
    for (Fiber w = 0; w < base.omega_count(); ++w) {
        schema_check(j.contains(base.label(w)), where, "missing fiber '" + base.label(w) + "'");
        each(w, j.at(base.label(w)), where + "." + base.label(w));
    }
}

inline std::vector<WordList> parse_elements(const SymbolicBundle& bundle, const json& j, const std::string& where) {
    schema_check(j.is_array(), where, "expected an array of elements");
    std::vector<WordList> out;
    for (const auto& element : j) {
        schema_check(element.is_array(), where, "an element is an array of words");
        WordList words;
        for (const auto& word : element) words.push_back(parse_word(bundle, word, where));
        out.push_back(std::move(words));
    }
    return out;
}

}  // namespace detail

/// Instance from a parsed JSON document. Unknown fields are rejected.
inline Instance instance_from_json(const json& j) {
    using namespace detail;
    only_keys(j, "instance", {"alphabet", "omega", "theta", "P", "adjacency", "covers", "measures"});
    std::vector<std::string> alphabet, omega;
    std::vector<std::size_t> theta;
    std::vector<double> weights;
    try {
        alphabet = field(j, "instance", "alphabet").get<std::vector<std::string>>();
        omega = field(j, "instance", "omega").get<std::vector<std::string>>();
        theta = field(j, "instance", "theta").get<std::vector<std::size_t>>();
        weights = field(j, "instance", "P").get<std::vector<double>>();
    } catch (const json::exception& e) {
        fail(ErrorKind::schema, std::string("instance: ") + e.what());
    }
    schema_check(std::set<std::string>(alphabet.begin(), alphabet.end()).size() == alphabet.size(), "alphabet",
                 "duplicate symbol names");
    schema_check(std::set<std::string>(omega.begin(), omega.end()).size() == omega.size(), "omega",
                 "duplicate fiber names");
    ProbBase base(omega, weights, theta);
    std::vector<Matrix<std::uint8_t>> adjacency(omega.size());
    per_fiber(field(j, "instance", "adjacency"), base, "adjacency", [&](Fiber w, const json& m, const std::string& at) {
        adjacency[w] = parse_matrix<std::uint8_t>(m, alphabet.size(), at);
    });
    Instance inst;
    inst.bundle = SymbolicBundle(std::move(base), alphabet, std::move(adjacency));
    const auto& bundle = inst.bundle;

    if (j.contains("covers")) {
        const auto& covers = j.at("covers");
        schema_check(covers.is_object(), "covers", "expected an object");
        for (const auto& [name, c] : covers.items()) {
            const std::string at = "covers." + name;
            only_keys(c, at, {"window", "product", "per_omega"});
            const auto& window = field(c, at, "window");
            schema_check(window.is_number_integer() && window.get<int>() >= 1, at, "window must be an integer >= 1");
            const Span span{0, window.get<int>()};
            schema_check(c.contains("product") != c.contains("per_omega"), at, "give exactly one of product, per_omega");
            if (c.contains("product")) {
                inst.covers[name] = make_product_cover(bundle, span, parse_elements(bundle, c.at("product"), at));
            } else {
                std::vector<std::vector<WordList>> sections;
                per_fiber(c.at("per_omega"), bundle.base(), at + ".per_omega", [&](Fiber w, const json& e, const std::string& where) {
                    auto elements = parse_elements(bundle, e, where);
                    if (w == 0) sections.assign(elements.size(), std::vector<WordList>(bundle.omega_count()));
                    schema_check(elements.size() == sections.size(), where, "every fiber needs the same number of elements");
                    for (std::size_t k = 0; k < elements.size(); ++k) sections[k][w] = std::move(elements[k]);
                });
                inst.covers[name] = make_cover(bundle, span, std::move(sections));
            }
        }
    }
    if (j.contains("measures")) {
        const auto& measures = j.at("measures");
        schema_check(measures.is_object(), "measures", "expected an object");
        for (const auto& [name, m] : measures.items()) {
            const std::string at = "measures." + name;
            only_keys(m, at, {"Q"});
            std::vector<Matrix<double>> q(bundle.omega_count());
            per_fiber(field(m, at, "Q"), bundle.base(), at + ".Q", [&](Fiber w, const json& x, const std::string& where) {
                q[w] = parse_matrix<double>(x, bundle.alphabet_size(), where);
            });
            inst.transitions[name] = std::move(q);
        }
    }
    return inst;
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::precondition, "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::schema, path + ": " + e.what());
    }
    return instance_from_json(j);
}

inline json cover_to_json(const SymbolicBundle& bundle, const PositionedCover& c) {
    using namespace detail;
    require(c.window.begin == 0, "only covers on windows starting at 0 can be written");
    json out;
    out["window"] = c.window.length();
    if (c.product_form) {
        json elements = json::array();
        for (const auto& element : c.sections) {
            WordList all;
            for (const auto& s : element) all.insert(all.end(), s.begin(), s.end());
            canonicalize(all);
            json words = json::array();
            for (const auto& w : all) words.push_back(word_to_json(bundle, w));
            elements.push_back(words);
        }
        out["product"] = elements;
    } else {
        json per = json::object();
        for (Fiber w = 0; w < bundle.omega_count(); ++w) {
            json elements = json::array();
            for (const auto& element : c.sections) {
                json words = json::array();
                for (const auto& word : element[w]) words.push_back(word_to_json(bundle, word));
                elements.push_back(words);
            }
            per[bundle.base().label(w)] = elements;
        }
        out["per_omega"] = per;
    }
    return out;
}

inline json instance_to_json(const Instance& inst) {
    using namespace detail;
    const auto& bundle = inst.bundle;
    const auto& base = bundle.base();
    json j;
    j["alphabet"] = bundle.alphabet();
    j["omega"] = base.labels();
    std::vector<std::size_t> theta;
    for (Fiber w = 0; w < base.omega_count(); ++w) theta.push_back(base.theta(w));
    j["theta"] = theta;
    j["P"] = base.weights();
    json adjacency = json::object();
    for (Fiber w = 0; w < base.omega_count(); ++w) adjacency[base.label(w)] = matrix_to_json(bundle.adjacency(w));
    j["adjacency"] = adjacency;
    if (!inst.covers.empty()) {
        json covers = json::object();
        for (const auto& [name, c] : inst.covers) covers[name] = cover_to_json(bundle, c);
        j["covers"] = covers;
    }
    if (!inst.transitions.empty()) {
        json measures = json::object();
        for (const auto& [name, q] : inst.transitions) {
            json per = json::object();
            for (Fiber w = 0; w < base.omega_count(); ++w) per[base.label(w)] = matrix_to_json(q[w]);
            measures[name] = json{{"Q", per}};
        }
        j["measures"] = measures;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Built-in instances

/// Two fibers swapped by theta with equal mass; w0 is the full 2-shift, w1 forbids bb.
inline Instance gm2() {
    ProbBase base({"w0", "w1"}, {0.5, 0.5}, {1, 0});
    Instance inst;
    inst.bundle = SymbolicBundle(std::move(base), {"a", "b"},
                                 {Matrix<std::uint8_t>{{1, 1}, {1, 1}}, Matrix<std::uint8_t>{{1, 1}, {1, 0}}});
    inst.covers["zero_cyl"] = zero_cylinder_partition(inst.bundle);
    inst.covers["ab_b"] = make_product_cover(inst.bundle, {0, 1}, {{{0}, {1}}, {{1}}});
    inst.transitions["example"] = {Matrix<double>{{0.5, 0.5}, {0.5, 0.5}}, Matrix<double>{{0.5, 0.5}, {1.0, 0.0}}};
    return inst;
}

inline Instance single_fiber(Matrix<std::uint8_t> a, Matrix<double> q) {
    Instance inst;
    inst.bundle = SymbolicBundle(ProbBase({"w0"}, {1.0}, {0}), {"a", "b"}, {std::move(a)});
    inst.covers["zero_cyl"] = zero_cylinder_partition(inst.bundle);
    inst.transitions["uniform"] = {std::move(q)};
    return inst;
}

/// Full 2-shift over one fiber.
inline Instance full2() { return single_fiber({{1, 1}, {1, 1}}, {{0.5, 0.5}, {0.5, 0.5}}); }

/// Identity adjacency over one fiber: two fixed points.
inline Instance id2() { return single_fiber({{1, 0}, {0, 1}}, {{1.0, 0.0}, {0.0, 1.0}}); }

inline Instance builtin_instance(const std::string& name) {
    if (name == "gm2") return gm2();
    if (name == "full2") return full2();
    if (name == "id2") return id2();
    fail(ErrorKind::unknown_name, "unknown built-in instance '" + name + "'");
}

}  // namespace rdelab
