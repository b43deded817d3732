#pragma once

#include <string>

#include "rdelab/instance.hpp"
#include "rdelab/optimize.hpp"
#include "rdelab/witness.hpp"

namespace rdelab {

// JSON views of the operation results. Keys are emitted sorted and doubles at
// full precision, so identical inputs give byte-identical documents.

inline json to_json(const EntropyReport& r) {
    json seq = json::array();
    for (const auto& [n, v] : r.sequence) seq.push_back({{"n", n}, {"value", json_number(v)}});
    json certified = json::array();
    for (double c : r.certified) certified.push_back(json_number(c));
    json j = {{"sequence", seq}, {"certified", certified}, {"certified_upper", json_number(r.certified_upper)},
              {"methods", r.methods}};
    j["exact_rate"] = r.exact_rate ? json_number(*r.exact_rate) : json(nullptr);
    return j;
}

inline json measure_to_json(const SymbolicBundle& bundle, const MarkovMeasure& mu) {
    json q = json::object(), p = json::object();
    for (Fiber w = 0; w < bundle.omega_count(); ++w) {
        q[bundle.base().label(w)] = detail::matrix_to_json(mu.transitions[w]);
        p[bundle.base().label(w)] = mu.starts[w];
    }
    return {{"Q", q}, {"starts", p}};
}

inline json to_json(const SymbolicBundle& bundle, const HPlus& h) {
    json j = {{"value", json_number(h.value)}, {"candidates", h.candidates}, {"complete", h.complete},
              {"argmin_index", h.argmin_index}};
    j["argmin"] = h.argmin ? cover_to_json(bundle, *h.argmin) : json(nullptr);
    return j;
}

inline json word_measure_summary(const WordMeasure& nu) {
    json fibers = json::array();
    for (const auto& f : nu.fibers) {
        double mass = 0.0;
        for (const auto& [w, x] : f) mass += x;
        fibers.push_back({{"support", f.size()}, {"mass", mass}});
    }
    return {{"horizon", nu.horizon}, {"fibers", fibers}};
}

inline json to_json(const SymbolicBundle& bundle, const Witness& w) {
    json fibers = json::array();
    for (Fiber f = 0; f < w.fibers.size(); ++f) {
        const auto& x = w.fibers[f];
        json words = json::array();
        for (const auto& word : x.words) words.push_back(detail::word_to_json(bundle, word));
        fibers.push_back({{"fiber", bundle.base().label(f)},
                          {"C_n", words},
                          {"size", x.words.size()},
                          {"pulled_count", x.pulled_count},
                          {"full_count", x.full_count},
                          {"bound", x.bound}});
    }
    json fb = json::array();
    for (const auto& b : w.fiber_bounds)
        fb.push_back({{"fiber", bundle.base().label(b.fiber)},
                      {"shift", b.shift},
                      {"partition", b.partition},
                      {"lhs", json_number(b.lhs)},
                      {"lhs_pushed", json_number(b.lhs_pushed)},
                      {"middle", json_number(b.middle)},
                      {"rhs", json_number(b.rhs)},
                      {"holds", b.holds}});
    json ab = json::array();
    for (const auto& b : w.average_bounds)
        ab.push_back({{"partition", b.partition},
                      {"m", b.m},
                      {"lhs", json_number(b.lhs)},
                      {"middle", json_number(b.middle)},
                      {"rhs", json_number(b.rhs)},
                      {"holds", b.holds}});
    json parts = json::array();
    for (const auto& p : w.partitions) parts.push_back(cover_to_json(bundle, p));
    return {{"n", w.n},
            {"cover_size", w.cover_size},
            {"partitions", parts},
            {"horizon", w.horizon},
            {"fibers", fibers},
            {"fiber_bounds", fb},
            {"average_bounds", ab},
            {"nu", word_measure_summary(w.nu)},
            {"mu", word_measure_summary(w.mu)},
            {"holds", w.all_hold()}};
}

inline json to_json(const SymbolicBundle& bundle, const MaximizeResult& r) {
    return {{"value", json_number(r.value)},
            {"htop", json_number(r.htop)},
            {"gap", json_number(r.gap)},
            {"max_seen", json_number(r.max_seen)},
            {"evaluations", r.evaluations},
            {"above_htop", r.above_htop},
            {"objective", r.objective},
            {"best", measure_to_json(bundle, r.best)}};
}

}  // namespace rdelab
