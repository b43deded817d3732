#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "rdelab/matrix.hpp"

namespace rdelab {

/// Nonnegative matrix in adjacency-list form.
struct SparseNonneg {
    std::size_t size = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;

    explicit SparseNonneg(std::size_t n = 0) : size(n), rows(n) {}

    void add(std::size_t from, std::size_t to, double weight) {
        rows[from].emplace_back(to, weight);
    }

    static SparseNonneg from_dense(const Matrix<double>& m) {
        SparseNonneg s(m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
                if (m(i, j) > 0.0) s.add(i, j, m(i, j));
        return s;
    }
};

/// Strongly connected components (iterative Tarjan). Returns component id per node.
inline std::vector<std::size_t> strongly_connected_components(const SparseNonneg& g,
                                                              std::size_t* count = nullptr) {
    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    const std::size_t n = g.size;
    std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call;  // node, next edge
    std::size_t next_index = 0, next_comp = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unset) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (edge < g.rows[v].size()) {
                const std::size_t w = g.rows[v][edge++].first;
                if (index[w] == unset) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::size_t finished = v;
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
            if (low[finished] == index[finished]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                } while (w != finished);
                ++next_comp;
            }
        }
    }
    if (count) *count = next_comp;
    return comp;
}

struct SpectralResult {
    double radius = 0.0;
    double residual = 0.0;  ///< Collatz-Wielandt bracket width at exit
    std::size_t iterations = 0;
    bool converged = true;
};

struct SpectralOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 100000;
};

/// Spectral radius of a nonnegative matrix, restricted to nodes in `active`
/// (all nodes when empty).
///
/// The matrix is split into strongly connected components; each irreducible
/// block is shifted by the identity, which makes it primitive, and power
/// iteration runs until the Collatz-Wielandt bounds
///   min_i (vB)_i / v_i <= rho(B) <= max_i (vB)_i / v_i
/// agree within the tolerance. A reducible matrix has the largest block radius.
inline SpectralResult spectral_radius(const SparseNonneg& g, const std::vector<bool>& active = {},
                                      SpectralOptions opts = {}) {
    std::size_t ncomp = 0;
    const auto comp = strongly_connected_components(g, &ncomp);
    std::vector<std::vector<std::size_t>> members(ncomp);
    for (std::size_t v = 0; v < g.size; ++v)
        if (active.empty() || active[v]) members[comp[v]].push_back(v);

    SpectralResult best;
    std::vector<std::size_t> local(g.size, 0);
    for (const auto& nodes : members) {
        if (nodes.empty()) continue;
        const std::size_t c = comp[nodes.front()];
        for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;

        bool has_internal_edge = false;
        for (std::size_t v : nodes)
            for (const auto& [w, weight] : g.rows[v])
                if (comp[w] == c && weight > 0.0) has_internal_edge = true;
        if (!has_internal_edge) continue;  // trivial block, radius 0

        const std::size_t k = nodes.size();
        std::vector<double> v(k, 1.0), next(k);
        double lower = 0.0, upper = std::numeric_limits<double>::infinity();
        std::size_t it = 0;
        for (; it < opts.max_iterations; ++it) {
            next = v;  // identity shift
            for (std::size_t i = 0; i < k; ++i)
                for (const auto& [w, weight] : g.rows[nodes[i]])
                    if (comp[w] == c) next[local[w]] += v[i] * weight;
            lower = std::numeric_limits<double>::infinity();
            upper = 0.0;
            double norm = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double ratio = next[i] / v[i];
                lower = std::min(lower, ratio);
                upper = std::max(upper, ratio);
                norm = std::max(norm, next[i]);
            }
            for (std::size_t i = 0; i < k; ++i) v[i] = next[i] / norm;
            if (upper - lower <= opts.tolerance * std::max(1.0, upper)) break;
        }
        SpectralResult r;
        r.radius = 0.5 * (lower + upper) - 1.0;
        r.residual = upper - lower;
        r.iterations = it + 1;
        r.converged = it < opts.max_iterations;
        if (r.radius > best.radius || !r.converged) {
            const bool keep_flag = best.converged && r.converged;
            const double radius = std::max(best.radius, r.radius);
            best = r;
            best.radius = radius;
            best.converged = keep_flag;
        }
        best.iterations = std::max(best.iterations, r.iterations);
        best.residual = std::max(best.residual, r.residual);
    }
    return best;
}

inline SpectralResult spectral_radius(const Matrix<double>& m, SpectralOptions opts = {}) {
    return spectral_radius(SparseNonneg::from_dense(m), {}, opts);
}

}  // namespace rdelab
