#pragma once

// Test-only oracles and generators. Everything here is deliberately written
// against the naive definitions, independent of the algorithms under test.

#include <set>
#include <string>
#include <vector>

#include "swid/dist.hpp"
#include "swid/graph.hpp"
#include "swid/numeric.hpp"

namespace swid::testing {

// d-separation by exhaustive enumeration of simple undirected paths: a path
// is blocked iff some interior node blocks it under the textbook triple
// rules; sets are separated iff every path between them is blocked.
inline bool oracle_d_separated(const CausalDag& dag, const std::set<VariableId>& a,
                               const std::set<VariableId>& b,
                               const std::set<VariableId>& given) {
    const std::size_t n = dag.size();
    std::vector<std::vector<std::size_t>> nbr(n);
    for (const auto& e : dag.edges()) {
        std::size_t u = dag.index_of(e.from), v = dag.index_of(e.to);
        nbr[u].push_back(v);
        nbr[v].push_back(u);
    }
    std::vector<bool> in_b(n, false), in_given(n, false);
    for (const auto& x : b) in_b[dag.index_of(x)] = true;
    for (const auto& x : given) in_given[dag.index_of(x)] = true;

    std::vector<bool> cond_desc(n, false);  // node or a descendant conditioned on
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& d : dag.descendants(dag.node(v).name))
            if (in_given[dag.index_of(d)]) cond_desc[v] = true;
    }

    auto edge = [&](std::size_t u, std::size_t v) {
        return dag.has_edge(dag.node(u).name, dag.node(v).name);
    };
    auto path_open = [&](const std::vector<std::size_t>& path) {
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            std::size_t u = path[i - 1], m = path[i], w = path[i + 1];
            bool collider = edge(u, m) && edge(w, m);
            if (collider ? !cond_desc[m] : in_given[m]) return false;
        }
        return true;
    };

    std::vector<bool> used(n, false);
    std::vector<std::size_t> path;
    bool connected = false;
    auto dfs = [&](auto&& self, std::size_t v) -> void {
        if (connected) return;
        used[v] = true;
        path.push_back(v);
        if (in_b[v] && path.size() >= 2 && path_open(path)) connected = true;
        if (!connected && !in_b[v]) {
            for (std::size_t w : nbr[v])
                if (!used[w]) self(self, w);
        }
        path.pop_back();
        used[v] = false;
    };
    for (const auto& x : a) {
        dfs(dfs, dag.index_of(x));
        if (connected) return false;
    }
    return true;
}

// Reflexive-transitive closure by repeated boolean matrix squaring.
inline std::set<VariableId> oracle_descendants(const CausalDag& dag, const VariableId& v) {
    const std::size_t n = dag.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
    for (const auto& e : dag.edges()) reach[dag.index_of(e.from)][dag.index_of(e.to)] = true;
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                if (reach[i][k])
                    for (std::size_t j = 0; j < n; ++j)
                        if (reach[k][j] && !reach[i][j]) {
                            reach[i][j] = true;
                            changed = true;
                        }
    }
    std::set<VariableId> out;
    std::size_t at = dag.index_of(v);
    for (std::size_t j = 0; j < n; ++j)
        if (reach[at][j]) out.insert(dag.node(j).name);
    return out;
}

inline CausalDag random_dag(DetRng& rng, std::size_t n, int edge_percent,
                            int latent_percent = 0) {
    std::vector<NodeDecl> nodes;
    for (std::size_t i = 0; i < n; ++i)
        nodes.push_back({"V" + std::to_string(i),
                         static_cast<int>(rng.below(100)) >= latent_percent});
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (static_cast<int>(rng.below(100)) < edge_percent)
                edges.push_back({nodes[i].name, nodes[j].name});
    return CausalDag(std::move(nodes), std::move(edges));
}

// DAG from an explicit upper-triangular edge mask over n declared nodes.
inline CausalDag dag_from_mask(std::size_t n, unsigned mask) {
    std::vector<NodeDecl> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back({"V" + std::to_string(i), true});
    std::vector<Edge> edges;
    std::size_t bit = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++bit)
            if (mask & (1u << bit)) edges.push_back({nodes[i].name, nodes[j].name});
    return CausalDag(std::move(nodes), std::move(edges));
}

// Strictly positive joint with random small-denominator rational masses.
inline DiscreteJoint<Rational> random_positive_joint(DetRng& rng,
                                                     const std::vector<Variable>& vars) {
    std::size_t cells = 1;
    for (const auto& v : vars) cells *= v.support.size();
    std::vector<std::uint64_t> ticks(cells);
    std::uint64_t total = 0;
    for (auto& t : ticks) {
        t = 1 + rng.below(32);
        total += t;
    }
    std::vector<Rational> table;
    for (auto t : ticks) table.emplace_back(BigInt(t), BigInt(total));
    return DiscreteJoint<Rational>(vars, std::move(table));
}

}  // namespace swid::testing
